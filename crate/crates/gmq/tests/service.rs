use axum::body::Body;
use axum::http::{Request, StatusCode};
use base64::Engine;
use gmq::model_io::ModelFile;
use gmq::service::{router, AppState, Session};
use gmq_core::{Camera, Gaussian3, Mat3, Vec3};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn model() -> ModelFile {
    let gs = [
        Gaussian3::isotropic(Vec3([0.0, -0.3, 0.0]), 0.04),
        Gaussian3::new(Vec3([0.3, 0.2, 0.1]), Mat3([[0.03, 0.01, 0.0], [0.01, 0.02, 0.0], [0.0, 0.0, 0.05]])),
    ];
    ModelFile::from_gaussians(&gs, &Camera::default())
}

fn app() -> axum::Router {
    router(AppState::new(Session::new(model()).unwrap()))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn identity(k: usize) -> Value {
    json!(vec![json!({"s": [1.0, 1.0, 1.0], "t": [0.0, 0.0, 0.0], "theta": [0.0, 0.0, 0.0]}); k])
}

#[tokio::test]
async fn health_and_model() {
    let app = app();
    let (s, v) = call(&app, "GET", "/health", None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({"status": "ok"})));
    let (s, v) = call(&app, "GET", "/model", None).await;
    assert_eq!(s, StatusCode::OK);
    let m: ModelFile = serde_json::from_value(v).unwrap();
    m.validate().unwrap();
    assert_eq!(m.revision, Some(0));
    assert_eq!(m.canonical, model().canonical);
}

#[tokio::test]
async fn transform_updates_bump_the_revision_and_reject_stale_ones() {
    let app = app();
    let mut tf = identity(2);
    tf[1]["t"] = json!([0.1, 0.0, -0.2]);
    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": tf, "yaw": 0.5, "revision": 0}))).await;
    assert_eq!((s, v), (StatusCode::OK, json!({"revision": 1})));

    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": identity(2), "yaw": 0.0, "revision": 0}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["field"], "revision");

    let (_, v) = call(&app, "GET", "/model", None).await;
    let m: ModelFile = serde_json::from_value(v).unwrap();
    assert_eq!(m.revision, Some(1));
    assert_eq!(m.images[0].yaw_rad, 0.5);
    assert_eq!(m.images[0].transforms[1].t, [0.1, 0.0, -0.2]);
    // the exported session reloads as a session at the same revision
    let again = Session::new(m).unwrap();
    assert_eq!((again.revision, again.yaw), (1, 0.5));
}

#[tokio::test]
async fn invalid_updates_are_unprocessable() {
    let app = app();
    let mut tf = identity(2);
    tf[0]["s"] = json!([1.0, 3.0, 1.0]);
    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": tf, "yaw": 0.0, "revision": 0}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["field"], "transforms[0].s[1]");

    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": identity(1), "yaw": 0.0, "revision": 0}))).await;
    assert_eq!((s, &v["field"]), (StatusCode::UNPROCESSABLE_ENTITY, &json!("transforms")));

    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": identity(2), "yaw": 7.0, "revision": 0}))).await;
    assert_eq!((s, &v["field"]), (StatusCode::UNPROCESSABLE_ENTITY, &json!("yaw")));

    let (s, v) = call(&app, "PUT", "/model/transforms", Some(json!({"transforms": identity(2), "yaw": "x", "revision": 0}))).await;
    assert_eq!((s, &v["field"]), (StatusCode::UNPROCESSABLE_ENTITY, &json!("yaw")));

    // nothing was applied
    let (_, v) = call(&app, "GET", "/model", None).await;
    assert_eq!(v["revision"], 0);
}

fn png_size(b64: &Value) -> (u32, u32) {
    let bytes = base64::engine::general_purpose::STANDARD.decode(b64.as_str().unwrap()).unwrap();
    let img = image::load_from_memory(&bytes).unwrap();
    (img.width(), img.height())
}

#[tokio::test]
async fn render_is_deterministic_and_reports_ellipses() {
    let app = app();
    let req = json!({"yaw": 0.7, "resolution": 128, "mode": "sum"});
    let (s, a) = call(&app, "POST", "/render", Some(req.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = call(&app, "POST", "/render", Some(req)).await;
    assert_eq!(a, b);
    assert_eq!((a["width"].clone(), a["height"].clone()), (json!(128), json!(128)));
    assert_eq!(png_size(&a["png"]), (128, 128));
    let ellipses = a["ellipses"].as_array().unwrap();
    assert_eq!(ellipses.len(), 2);
    assert!(ellipses.iter().all(|e| e["valid"] == true));

    let (_, strip) = call(&app, "POST", "/render", Some(json!({"resolution": 64, "mode": "per-k"}))).await;
    assert_eq!(png_size(&strip["png"]), (128, 64));
    let (s, sil) = call(&app, "POST", "/render", Some(json!({"resolution": 64, "mode": "silhouette", "tau": 0.3}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(png_size(&sil["png"]), (64, 64));
}

#[tokio::test]
async fn yaw_rotates_the_whole_model() {
    let app = app();
    let at = |yaw: f64| json!({"yaw": yaw, "resolution": 64, "mode": "silhouette"});
    let (_, zero) = call(&app, "POST", "/render", Some(at(0.0))).await;
    let (_, full) = call(&app, "POST", "/render", Some(at(2.0 * std::f64::consts::PI))).await;
    assert_eq!(zero["png"], full["png"]);
    let (_, half) = call(&app, "POST", "/render", Some(at(std::f64::consts::PI))).await;
    assert_ne!(zero["png"], half["png"]);
    // a half turn mirrors the ellipse centres about the vertical axis
    let cx = 32.0;
    for k in 0..2 {
        let a = zero["ellipses"][k]["mu_px"][0].as_f64().unwrap();
        let b = half["ellipses"][k]["mu_px"][0].as_f64().unwrap();
        if (a - cx).abs() > 1.0 {
            assert!((a - cx) * (b - cx) < 0.0, "{a} {b}");
        }
    }
}

#[tokio::test]
async fn bad_render_requests_are_unprocessable() {
    let app = app();
    for (req, field) in [
        (json!({"resolution": 0, "mode": "sum"}), "resolution"),
        (json!({"resolution": 1024, "mode": "sum"}), "resolution"),
        (json!({"resolution": 64, "mode": "sum", "tau": 1.5}), "tau"),
        (json!({"resolution": 64, "mode": "wireframe"}), "mode"),
        (json!({"resolution": 64, "mode": "sum", "transforms": identity(3)}), "transforms"),
    ] {
        let (s, v) = call(&app, "POST", "/render", Some(req)).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(v["field"], field);
    }
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/render")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}
