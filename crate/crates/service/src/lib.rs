//! Storage and render service, live session streaming and the command line
//! front end for the `soundscape` engine.

pub mod api;
pub mod cli;
pub mod remote;
pub mod session;
pub mod storage;
