//! Synchronization analysis and length-constrained soft decoding of
//! variable-length codes.

pub mod catalog;
pub mod channel;
pub mod codes;
pub mod combined;
pub mod harness;
pub mod laurent;
pub mod rng;
pub mod sync_analysis;
pub mod trellis;

pub use catalog::{Catalog, CatalogEntry, CatalogError};
pub use channel::{criteria, ChannelError, ChannelSpec, CodeCriteria, DeltaSAnalysis, Received};
pub use codes::{CodeError, CodeTree, SourceModel, VlcCode};
pub use laurent::{LaurentError, LaurentPoly};
pub use sync_analysis::{ErrorStateDiagram, SyncError};
pub use trellis::{DecodeError, DecodeResult, SoftDecoder, StateModel, TrellisConfig};
pub use combined::{combined_decode, CombinedConfig, CombinedError};
