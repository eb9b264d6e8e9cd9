#![allow(dead_code)]

pub mod captype;
pub mod mutate;
