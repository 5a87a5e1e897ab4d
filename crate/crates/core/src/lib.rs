pub mod error;
pub mod linalg;
pub mod qpm;
pub mod random;
pub mod channels;
pub mod dilation;
pub mod modmu;
pub mod discretize;
pub mod io;
