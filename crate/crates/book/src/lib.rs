//! The guide under `book/`, compiled so its listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/perception.md")]
pub mod perception {}

#[doc = include_str!("../../../book/src/similarity.md")]
pub mod similarity {}

#[doc = include_str!("../../../book/src/taggers.md")]
pub mod taggers {}

#[doc = include_str!("../../../book/src/reality.md")]
pub mod reality {}

#[doc = include_str!("../../../book/src/cps.md")]
pub mod cps {}

#[doc = include_str!("../../../book/src/environments.md")]
pub mod environments {}

#[doc = include_str!("../../../book/src/audit.md")]
pub mod audit {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
