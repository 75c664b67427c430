#![allow(dead_code)]

pub mod model_check;
pub mod oracles;
