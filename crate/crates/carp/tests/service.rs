use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use carp::server::{router, AppState};
use carp_core::classify::train_knn;
use carp_core::dataset::{render_scene, CardPlacement, Face, SceneSpec};
use carp_core::pipeline::{AnalysisReport, PipelineConfig};
use carp_core::reproject::CornerPatch;
use carp_core::{CardLabel, HogParams, ImageGray};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Router over a one-example model: detection works, every card reads as 2.
fn app() -> Router {
    let blank = CornerPatch::new(ImageGray::filled(28, 28, 0).unwrap()).unwrap();
    let model = train_knn(&[(blank, CardLabel::Two)], 1, &HogParams::default()).unwrap();
    router(AppState::new(model, PipelineConfig::default()), None)
}

async fn send(req: Request<Body>) -> (StatusCode, Value) {
    let resp = app().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn post_json(body: &str) -> Request<Body> {
    Request::post("/api/recommend")
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap()
}

fn scene_png() -> Vec<u8> {
    let mut spec = SceneSpec::new(640, 480, 9);
    for (i, x) in [120.0, 320.0, 520.0].into_iter().enumerate() {
        let y = if i == 0 { 120.0 } else { 340.0 };
        spec.cards
            .push(CardPlacement::upright(Face::for_label(CardLabel::Seven, false), (x, y), 100.0));
    }
    render_scene(&spec).unwrap().image.encode_png().unwrap()
}

#[tokio::test]
async fn recommend_returns_move_and_text() {
    let (status, v) = send(post_json(r#"{"player":["8","8"],"dealer":"10"}"#)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({"move": "split", "display": "Split."}));
    let (_, v) = send(post_json(r#"{"player":["A",7],"dealer":6}"#)).await;
    assert_eq!(v["display"], "Double.");
}

#[tokio::test]
async fn recommend_rejects_bad_input() {
    let (status, v) = send(post_json(r#"{"player":["9"],"dealer":"5"}"#)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].is_string());
    assert_eq!(send(post_json("{not json")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(send(post_json(r#"{"player":["9","Z"],"dealer":"5"}"#)).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(send(post_json(r#"{"dealer":"5"}"#)).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn labels_and_health() {
    let (status, v) = send(Request::get("/api/labels").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    let labels: Vec<&str> = v.as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    assert_eq!(labels.len(), 14);
    assert!(labels.contains(&"BACK"));
    let mut sorted = labels.clone();
    sorted.sort_unstable();
    assert_eq!(labels, sorted);

    let (status, v) = send(Request::get("/api/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["model"]["examples"], 1);
}

#[tokio::test]
async fn analyze_accepts_a_raw_png_body() {
    let req = Request::post("/api/analyze")
        .header("content-type", "image/png")
        .body(Body::from(scene_png()))
        .unwrap();
    let (status, v) = send(req).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let report: AnalysisReport = serde_json::from_value(v).unwrap();
    assert_eq!((report.width, report.height), (640, 480));
    assert_eq!(report.cards.len(), 3);
    // one dealer 2 up top, two player 2s below
    assert_eq!(report.recommendation.unwrap().display, "Double Down Split. If not possible, then hit.");
}

#[tokio::test]
async fn analyze_accepts_multipart() {
    let boundary = "XbOuNdArYx";
    let mut body = Vec::new();
    body.extend_from_slice(
        format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"t.png\"\r\nContent-Type: image/png\r\n\r\n"
        )
        .as_bytes(),
    );
    body.extend_from_slice(&scene_png());
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    let req = Request::post("/api/analyze")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let (status, v) = send(req).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["cards"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn analyze_rejects_other_bodies() {
    let req = Request::post("/api/analyze")
        .header("content-type", "text/plain")
        .body(Body::from("hello"))
        .unwrap();
    assert_eq!(send(req).await.0, StatusCode::BAD_REQUEST);
    let req = Request::post("/api/analyze")
        .header("content-type", "image/png")
        .body(Body::from(vec![1u8, 2, 3]))
        .unwrap();
    let (status, v) = send(req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("decode"));
}

#[tokio::test]
async fn unknown_api_route_is_not_found() {
    let (status, _) = send(Request::get("/api/nope").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
