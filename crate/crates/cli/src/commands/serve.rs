use std::sync::Arc;
use std::time::Duration;

use vidcue_service::{router, AppState, HttpSegmenter, SegmentationClient, Store, StubSegmenter};

use crate::cli::ServeArgs;
use crate::context::RunContext;
use crate::error::{CliError, Result};

/// Opens the store and applies `--import`. Serving happens after the manifest
/// is emitted.
pub fn prepare(ctx: &mut RunContext, args: &ServeArgs) -> Result<AppState> {
    let store = Store::open(&args.store).map_err(|e| CliError::io(&args.store, e))?;
    if let Some(path) = &args.import {
        let text = ctx.read_text(path)?;
        let n = store.import(&text).map_err(|e| CliError::Findings(format!("{}: {e}", path.display())))?;
        ctx.note(format!("imported {n} videos from {}", path.display()));
    }
    let segmenter: Arc<dyn SegmentationClient> = if args.segmenter == "stub" {
        Arc::new(StubSegmenter)
    } else {
        let client = HttpSegmenter::new(args.segmenter.clone(), Duration::from_millis(args.segmenter_timeout_ms))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Arc::new(client)
    };
    Ok(AppState { store: Arc::new(store), segmenter })
}

pub fn run(state: AppState, bind: &str) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| CliError::Io { path: bind.into(), message: e.to_string() })?;
        let addr = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}
