use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Value};
use tower::ServiceExt;

use substep_core::analysis::load;
use substep_core::kernel::bridge::trace_to_proof;
use substep_core::snm::{run_to_value, Strategy, Trace};
use substep_service::{router, Service};

fn root(rel: &str) -> String {
    format!("{}/../../{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn program(name: &str) -> String {
    std::fs::read_to_string(root(&format!("programs/{name}"))).unwrap()
}

fn app() -> Router {
    router(Service::load(Some(std::path::Path::new(&root("logics")))).unwrap())
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post_raw(app: &Router, body: String) -> (StatusCode, Value) {
    let req = Request::post("/check")
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    send(app, req).await
}

async fn post(app: &Router, body: &Value) -> (StatusCode, Value) {
    post_raw(app, body.to_string()).await
}

fn even(goal: &str, steps: &[&str]) -> Value {
    json!({"schema": 1, "logic": "even", "goal": goal, "script": steps.join("\n")})
}

fn ints_script() -> Value {
    json!({
        "schema": 1,
        "logic": "snm",
        "program": program("ints.py"),
        "script": program("ints_defs_first.script"),
    })
}

#[tokio::test]
async fn lists_builtin_and_loaded_logics() {
    let (status, body) = get(&app(), "/logics").await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = body["logics"].as_array().unwrap().iter().map(|l| l["name"].as_str().unwrap()).collect();
    for n in ["even", "snm", "snm-bridge", "first-order"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
    assert!(body["logics"].as_array().unwrap().iter().all(|l| l["version"].is_string()));

    let (_, fresh) = get(&router(Service::default()), "/logics").await;
    let names: Vec<&str> = fresh["logics"].as_array().unwrap().iter().map(|l| l["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["even", "snm", "snm-bridge"]);
}

#[tokio::test]
async fn logic_details() {
    let app = app();
    let (status, even) = get(&app, "/logics/even").await;
    assert_eq!(status, StatusCode::OK);
    let rules: Vec<&str> = even["rules"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(rules, ["even-zero", "even-nonzero"]);
    assert_eq!(even["relations"].as_array().unwrap().len(), 1);
    assert_eq!(even["sorts"].as_array().unwrap().len(), 1);

    let (status, snm) = get(&app, "/logics/snm").await;
    assert_eq!(status, StatusCode::OK);
    let rules = snm["rules"].as_array().unwrap();
    assert_eq!(rules.len(), 16);
    assert!(rules.iter().all(|r| r["params"].is_array() && r["id"].is_string()));

    let (status, body) = get(&app, "/logics/nonesuch").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not-found");
}

#[tokio::test]
async fn even_proofs() {
    let app = app();
    let (status, ok) = post(&app, &even("even(4)", &["even-nonzero", "even-nonzero", "even-zero"])).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ok["mode"], "kernel");
    assert_eq!(ok["valid"], true);
    let befores: Vec<&str> = ok["steps"].as_array().unwrap().iter().map(|s| s["before"][0].as_str().unwrap()).collect();
    assert_eq!(befores, ["even(4)", "even(2)", "even(0)"]);

    let (status, bad) = post(&app, &even("even(4)", &["even-zero"])).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bad["valid"], false);
    assert_eq!(bad["failed_step"], 1);
    assert!(bad["message"].as_str().unwrap().contains("does not unify"), "{bad}");

    let nodes = json!({"schema": 1, "logic": "even", "goal": "even(2)",
        "script": [{"rule": "even-nonzero", "bindings": {"N": "0"}}, {"rule": "even-zero"}]});
    assert_eq!(post(&app, &nodes).await.1["valid"], true);
}

#[tokio::test]
async fn first_order_from_the_logic_directory() {
    let req = json!({"schema": 1, "logic": "first-order", "goal": "Proves(GNil, imp(p, and(p, p)))",
        "script": "imp-intro X=h\nand-intro\nvar\nvar"});
    let (status, body) = post(&app(), &req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], true, "{body}");
}

#[tokio::test]
async fn snm_traces() {
    let app = app();
    let (status, body) = post(&app, &ints_script()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["mode"], "snm");
    assert_eq!(body["valid"], true);
    assert_eq!(body["trace"]["final"], "42");
    assert_eq!(body["trace"]["steps"].as_array().unwrap().len(), 4);
    assert_eq!(body["rendered"], std::fs::read_to_string(root("golden/ints.trace")).unwrap());

    let auto = json!({"schema": 1, "logic": "snm", "program": program("pow_undefined.py"), "config": {"strategy": "rtl"}});
    let (_, body) = post(&app, &auto).await;
    assert_eq!(body["outcome"]["kind"], "error");

    let held = json!({"schema": 1, "logic": "snm", "program": program("power.py"), "config": {"hold": ["x"]}});
    let (_, body) = post(&app, &held).await;
    assert_eq!(body["outcome"]["kind"], "stuck-symbolic");
    assert_eq!(body["outcome"]["expr"], "x**2");

    let limited = json!({"schema": 1, "logic": "snm", "program": program("power.py"), "config": {"step_limit": 3}});
    let (_, body) = post(&app, &limited).await;
    assert_eq!(body["outcome"]["kind"], "step-limit");
    assert_eq!(body["trace"]["steps"].as_array().unwrap().len(), 3);

    let broken = json!({"schema": 1, "logic": "snm", "program": program("ints.py"), "script": "name-to-def @root var=x\nif-true @root"});
    let (_, body) = post(&app, &broken).await;
    assert_eq!(body["valid"], false);
    assert_eq!(body["failed_step"], 2);
}

#[tokio::test]
async fn verification_requests() {
    let app = app();
    let req = |script: &str| {
        json!({"schema": 1, "logic": "snm", "program": program("power.py"), "script": script,
            "verify": {"function": "power", "symbols": ["x", "y"]}})
    };
    let (_, body) = post(&app, &req(&program("power_discharge.script"))).await;
    assert_eq!(body["valid"], true, "{body}");
    assert_eq!(body["verification"]["status"], "discharged");
    let (_, body) = post(&app, &req("")).await;
    assert_eq!(body["valid"], false);
    assert_eq!(body["verification"]["final"], "power(x, y) if y>0 else ERROR");
}

#[tokio::test]
async fn bridge_proofs_through_the_service() {
    let t = run_to_value(&Trace::new(load(&program("ints.py")).unwrap()), Strategy::Ltr, 100).trace;
    let (goal, proof) = trace_to_proof(&t);
    let req = json!({"schema": 1, "logic": "snm-bridge", "goal": goal.to_string(),
        "script": proof.to_text(), "program": program("ints.py")});
    let (status, body) = post(&app(), &req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], true, "{body}");
    assert_eq!(body["steps"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn request_errors() {
    let app = app();
    let (status, body) = post_raw(&app, "{not json".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad-request");

    let (status, _) = post(&app, &json!({"logic": "even", "goal": "even(0)"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post(&app, &json!({"schema": 99, "logic": "even", "goal": "even(0)"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post(&app, &json!({"schema": 1, "logic": "even", "goal": "even(0)", "extra": 1})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post(&app, &json!({"schema": 1, "logic": "even"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post(&app, &json!({"schema": 1, "logic": "snm", "program": "x: int = 1\n# |-\nx", "config": {"strategy": "sideways"}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = post(&app, &even("even(Proves(GNil, p))", &[])).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    let (status, body) = post(&app, &even("Proves(GNil, p)", &[])).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");

    let bad_program = json!({"schema": 1, "logic": "snm", "program": "x: int = 'a'\n\n# |-\n\nx\n"});
    let (status, body) = post(&app, &bad_program).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!body["diagnostics"].as_array().unwrap().is_empty());

    let (status, _) = post(&app, &json!({"schema": 1, "logic": "nonesuch", "goal": "x"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cors_is_enabled() {
    let req = Request::get("/logics").header("origin", "http://localhost:5173").body(Body::empty()).unwrap();
    let res = app().oneshot(req).await.unwrap();
    assert_eq!(res.headers()["access-control-allow-origin"], "*");
}

/// Fifty requests of every kind, including failing and rejected ones.
fn mixed_requests() -> Vec<Value> {
    let mut reqs = Vec::new();
    for i in 0..10 {
        let n = 2 * (i % 4);
        let steps: Vec<&str> = std::iter::repeat_n("even-nonzero", n / 2).chain(["even-zero"]).collect();
        reqs.push(even(&format!("even({n})"), &steps));
        reqs.push(even(&format!("even({})", n + 1), &steps));
        reqs.push(ints_script());
        let (file, strategy) = [("power.py", "ltr"), ("pow_call.py", "rtl"), ("rec_punct.py", "normal")][i % 3];
        reqs.push(json!({"schema": 1, "logic": "snm", "program": program(file), "config": {"strategy": strategy}}));
        reqs.push(match i % 3 {
            0 => json!({"schema": 1, "logic": "snm", "program": "x: int = 'a'\n\n# |-\n\nx\n"}),
            1 => json!({"schema": 2, "logic": "even", "goal": "even(0)"}),
            _ => json!({"schema": 1, "logic": "snm", "program": program("power.py"), "script": "",
                "verify": {"function": "power", "symbols": ["x", "y"]}}),
        });
    }
    reqs
}

#[tokio::test]
async fn shuffled_replay_matches_sequential_replay() {
    let reqs = mixed_requests();
    assert_eq!(reqs.len(), 50);
    let first = app();
    let mut sequential = Vec::new();
    for r in &reqs {
        sequential.push(post(&first, r).await);
    }
    let mut order: Vec<usize> = (0..reqs.len()).collect();
    order.shuffle(&mut StdRng::seed_from_u64(50));
    let fresh = app();
    for &i in &order {
        assert_eq!(post(&fresh, &reqs[i]).await, sequential[i], "request {i} answered differently");
    }
    let handles: Vec<_> = order
        .iter()
        .map(|&i| {
            let (app, req) = (fresh.clone(), reqs[i].clone());
            tokio::spawn(async move { (i, post(&app, &req).await) })
        })
        .collect();
    for h in handles {
        let (i, got) = h.await.unwrap();
        assert_eq!(got, sequential[i], "concurrent request {i} answered differently");
    }
}

#[tokio::test]
async fn repeated_requests_are_identical() {
    let app = app();
    for req in [ints_script(), even("even(4)", &["even-nonzero", "even-nonzero", "even-zero"])] {
        let first = post(&app, &req).await;
        for _ in 0..5 {
            assert_eq!(post(&app, &req).await, first);
        }
    }
}

#[tokio::test]
async fn failures_leave_nothing_behind() {
    let app = app();
    let good = even("even(2)", &["even-nonzero", "even-zero"]);
    let alone = post(&router(Service::load(Some(std::path::Path::new(&root("logics")))).unwrap()), &good).await;
    post(&app, &even("even(2)", &["even-zero"])).await;
    post_raw(&app, "{".into()).await;
    post(&app, &json!({"schema": 1, "logic": "snm", "program": program("ints.py"), "script": "if-true @root"})).await;
    assert_eq!(post(&app, &good).await, alone);
}
