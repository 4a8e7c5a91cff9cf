//! Loopback HTTP server answering the model wire protocol from a local
//! backend. Exists for tests and for driving the remote client without a
//! real inference service.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use bestk_core::models::remote::{WireRequest, WireResponse};
use bestk_core::models::SequenceModel;
use bestk_core::types::TokenId;

use crate::error::HarnessError;

pub struct MockServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves
    /// requests on a background thread until dropped or stopped.
    pub fn spawn(model: Arc<dyn SequenceModel>, addr: &str) -> Result<MockServer, HarnessError> {
        let server = Arc::new(
            tiny_http::Server::http(addr)
                .map_err(|e| HarnessError::Config(format!("bind {addr}: {e}")))?,
        );
        let bound = match server.server_addr() {
            tiny_http::ListenAddr::IP(addr) => addr,
            _ => return Err(HarnessError::Config("expected an IP listener".into())),
        };
        let background = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for mut request in background.incoming_requests() {
                let reply = respond(model.as_ref(), &mut request);
                let status = if reply.is_ok() { 200 } else { 400 };
                let body = match reply {
                    Ok(body) => body,
                    Err(message) => message,
                };
                let response = tiny_http::Response::from_string(body)
                    .with_status_code(status)
                    .with_header(
                        tiny_http::Header::from_bytes(
                            &b"Content-Type"[..],
                            &b"application/json"[..],
                        )
                        .expect("static header parses"),
                    );
                let _ = request.respond(response);
            }
        });
        Ok(MockServer {
            server,
            addr: bound,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/", self.addr)
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn respond(model: &dyn SequenceModel, request: &mut tiny_http::Request) -> Result<String, String> {
    let mut body = String::new();
    request
        .as_reader()
        .read_to_string(&mut body)
        .map_err(|e| format!("{{\"error\": \"read: {e}\"}}"))?;
    let wire: WireRequest =
        serde_json::from_str(&body).map_err(|e| format!("{{\"error\": \"parse: {e}\"}}"))?;
    let views: Vec<&[TokenId]> = wire.prefixes.iter().map(Vec::as_slice).collect();
    let logprobs = model
        .next_logprobs(&views)
        .map_err(|e| format!("{{\"error\": \"model: {e}\"}}"))?;
    let response = WireResponse {
        logprobs,
        request_id: wire.request_id,
    };
    serde_json::to_string(&response).map_err(|e| format!("{{\"error\": \"encode: {e}\"}}"))
}
