pub mod aux_graph;
pub mod hamilton;
pub mod harness;
pub mod hyperedge;
pub mod kout;
pub mod matching;
pub mod matching_solver;
pub mod process;
pub mod profile;
pub mod verify;
