//! Acceptance suite host. Run `cargo test -p vidcue-acceptance --test acceptance`.
