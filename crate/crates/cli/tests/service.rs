mod common;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use geocell_core::io::{format_refined_row, load_cluster_index, read_embeddings, read_predictions, REFINED_HEADER};
use geocell_core::refine::{ClusterIndex, RefineParams, Refined};
use geocell_kit::commands::refine_table;
use geocell_kit::service::{router, AppState, RefineRequest, RefineResponse};
use serde_json::{json, Value};
use tower::ServiceExt;

fn toy_index() -> (tempfile::TempDir, ClusterIndex) {
    let dir = tempfile::tempdir().unwrap();
    common::toy_pipeline(dir.path(), &[], &[]);
    let index = load_cluster_index(&dir.path().join("index")).unwrap();
    (dir, index)
}

async fn send(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn requests() -> Vec<(String, RefineRequest)> {
    let preds = read_predictions(&common::toy().join("predictions.csv")).unwrap();
    let queries = read_embeddings(&common::toy().join("queries.embd")).unwrap();
    preds
        .into_iter()
        .map(|p| {
            let req = RefineRequest {
                embedding: queries.row(p.embedding_row).to_vec(),
                topk: p.topk,
            };
            (p.id, req)
        })
        .collect()
}

#[tokio::test]
async fn loading_state_answers_503() {
    let app = router(AppState::pending(RefineParams::default()));
    let (status, body) = send(&app, "GET", "/healthz", Body::empty()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["error"], "Loading");
    let (status, _) = send(&app, "POST", "/refine", r#"{"embedding":[],"topk":[]}"#).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn health_and_bad_requests() {
    let (_dir, index) = toy_index();
    let summary = index.summary();
    let state = AppState::pending(RefineParams::default());
    let app = router(state.clone());
    state.install(index);
    let (status, body) = send(&app, "GET", "/healthz", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["cells"], summary.cells);
    assert_eq!(v["clusters"], summary.clusters);

    let (status, _) = send(&app, "POST", "/refine", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, "POST", "/refine", r#"{"embedding":[1.0],"topk":[],"extra":1}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, good) = requests().remove(0);
    let unknown = json!({ "embedding": good.embedding, "topk": [{ "cell_id": 999, "prob": 1.0 }] });
    let (status, body) = send(&app, "POST", "/refine", unknown.to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["error"], "DataContract");
    let short = json!({ "embedding": [0.0, 1.0], "topk": good.topk });
    let (status, _) = send(&app, "POST", "/refine", short.to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, "GET", "/refine", Body::empty()).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test]
async fn responses_match_batch_refinement() {
    let (_dir, index) = toy_index();
    let params = RefineParams::street_view();
    let preds = read_predictions(&common::toy().join("predictions.csv")).unwrap();
    let queries = read_embeddings(&common::toy().join("queries.embd")).unwrap();
    let batch = refine_table(&index, &preds, &queries, &params).unwrap();
    let app = router(AppState::ready(index, params));
    let mut text = format!("{REFINED_HEADER}\n");
    for (id, req) in requests() {
        let (status, body) = send(&app, "POST", "/refine", serde_json::to_vec(&req).unwrap()).await;
        assert_eq!(status, StatusCode::OK);
        let resp: RefineResponse = serde_json::from_slice(&body).unwrap();
        text.push_str(&format_refined_row(&id, &Refined::from(resp)));
        text.push('\n');
    }
    assert_eq!(text, batch);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_agree() {
    let (_dir, index) = toy_index();
    let app = router(AppState::ready(index, RefineParams::general()));
    let reqs = requests();
    let mut expected = Vec::new();
    for (_, r) in &reqs {
        expected.push(send(&app, "POST", "/refine", serde_json::to_vec(r).unwrap()).await.1);
    }
    let mut tasks = Vec::new();
    for round in 0..8 {
        for (i, (_, r)) in reqs.iter().enumerate() {
            let app = app.clone();
            let body = serde_json::to_vec(r).unwrap();
            tasks.push(tokio::spawn(async move { (i, round, send(&app, "POST", "/refine", body).await) }));
        }
    }
    for t in tasks {
        let (i, _, (status, body)) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body, expected[i]);
    }
}
