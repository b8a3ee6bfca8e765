pub mod audio;
pub mod dsp;
pub mod model;
pub mod effects;
pub mod binaural;
pub mod engine;
pub mod trajectory;
