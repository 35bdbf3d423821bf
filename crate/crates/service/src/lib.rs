//! Annotation backend: a file-per-video store with optimistic locking, a
//! pluggable point-to-mask client and the HTTP routes the annotation UI uses.

pub mod api;
pub mod segment;
pub mod store;

pub use api::{router, AppState};
pub use segment::{HttpSegmenter, MaskResult, Rle, SegmentError, SegmentRequest, SegmentationClient, StubSegmenter};
pub use store::{AnnotationEnvelope, Failpoint, ListEntry, Store, StoreError, VideoInfo};
