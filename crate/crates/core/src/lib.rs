pub mod acceptance;
pub mod bitree;
pub mod brw;
pub mod error;
pub mod fit;
pub mod freeprod;
pub mod groups;
pub mod growth;
pub mod kernels;
pub mod report;
pub mod trees;
