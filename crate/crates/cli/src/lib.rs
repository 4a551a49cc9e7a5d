//! File formats, generators and the `parmetric` command-line tool built on
//! `parmetric-core`.

pub mod certificate;
pub mod commands;
pub mod generate;
pub mod instance;
pub mod report;

pub use certificate::{CertificateError, CertificateFile, Scaled};
pub use commands::{run_command, EXIT_INTERNAL, EXIT_INVALID, EXIT_NOT_PARALLEL, EXIT_OK, EXIT_PARSE};
pub use generate::{generate, GenerateError, GeneratorKind, GeneratorParams};
pub use instance::{load_instance, parse_instance, save_instance, Instance, InstanceFile, LoadError};
