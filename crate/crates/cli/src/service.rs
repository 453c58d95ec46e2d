//! HTTP refinement service over an immutable cluster index.
//!
//! `POST /refine` takes `{embedding, topk: [{cell_id, prob}]}` and answers
//! with the refined location. `GET /healthz` reports readiness. Both answer
//! 503 until the index has loaded.

use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use geocell_core::io::load_cluster_index;
use geocell_core::refine::{refine_topk, CellProb, ClusterIndex, RefineError, RefineParams, Refined};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::info;

pub struct AppState {
    index: OnceLock<ClusterIndex>,
    params: RefineParams,
}

impl AppState {
    /// State whose index is still loading.
    pub fn pending(params: RefineParams) -> Arc<AppState> {
        Arc::new(AppState {
            index: OnceLock::new(),
            params,
        })
    }

    pub fn ready(index: ClusterIndex, params: RefineParams) -> Arc<AppState> {
        let state = AppState::pending(params);
        state.install(index);
        state
    }

    /// Publishes the index. Later calls are ignored.
    pub fn install(&self, index: ClusterIndex) {
        let _ = self.index.set(index);
    }

    pub fn index(&self) -> Option<&ClusterIndex> {
        self.index.get()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineRequest {
    pub embedding: Vec<f32>,
    pub topk: Vec<CellProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResponse {
    pub lat: f64,
    pub lon: f64,
    pub cluster_id: u32,
    pub sample_id: String,
    pub score: f64,
    pub cell_id: u32,
    pub fallback: bool,
}

impl From<Refined> for RefineResponse {
    fn from(r: Refined) -> Self {
        RefineResponse {
            lat: r.lat,
            lon: r.lon,
            cluster_id: r.cluster_id,
            sample_id: r.sample_id,
            score: r.score,
            cell_id: r.cell_id,
            fallback: r.fallback,
        }
    }
}

impl From<RefineResponse> for Refined {
    fn from(r: RefineResponse) -> Self {
        Refined {
            lat: r.lat,
            lon: r.lon,
            cell_id: r.cell_id,
            cluster_id: r.cluster_id,
            sample_id: r.sample_id,
            score: r.score,
            fallback: r.fallback,
        }
    }
}

fn error(status: StatusCode, kind: &str, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": kind, "message": message.to_string() }))).into_response()
}

fn loading() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "Loading", "cluster index is still loading")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/refine", post(refine))
        .with_state(state)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    match state.index() {
        Some(idx) => {
            let s = idx.summary();
            Json(json!({ "status": "ok", "cells": s.cells, "clusters": s.clusters, "samples": s.samples }))
                .into_response()
        }
        None => loading(),
    }
}

async fn refine(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let Some(index) = state.index() else {
        return loading();
    };
    let req: RefineRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "InvalidRequest", e),
    };
    match refine_topk(&req.embedding, &req.topk, index, &state.params) {
        Ok(r) => Json(RefineResponse::from(r)).into_response(),
        Err(e @ RefineError::Invariant(_)) => error(StatusCode::INTERNAL_SERVER_ERROR, "Invariant", e),
        Err(e) => error(StatusCode::BAD_REQUEST, "DataContract", e),
    }
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

/// Binds `addr`, loads the index in the background and serves until
/// interrupted. A failed index load stops the server with that error.
pub async fn serve(addr: SocketAddr, index_dir: PathBuf, params: RefineParams) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    info!(addr = %listener.local_addr()?, "listening");
    let state = AppState::pending(params);
    let loader = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || -> Result<()> {
            let idx = load_cluster_index(&index_dir)?;
            info!(clusters = idx.summary().clusters, "index loaded");
            state.install(idx);
            Ok(())
        })
    };
    let server = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown_signal())
        .into_future();
    tokio::pin!(server);
    tokio::select! {
        r = &mut server => r.context("serving")?,
        loaded = loader => {
            loaded.context("index loader panicked")??;
            server.await.context("serving")?;
        }
    }
    Ok(())
}
