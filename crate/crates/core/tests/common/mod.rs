#![allow(dead_code)]

pub mod oracle;
pub mod resolution;
pub mod stub;
