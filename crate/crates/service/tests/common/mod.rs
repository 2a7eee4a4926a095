#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::{Duration, Instant};

use cuttlefish_core::planner::SearchBudget;
use cuttlefish_core::{scenarios, DynamicTariff, HomeModel, Price};
use cuttlefish_service::{Service, ServiceConfig};
use serde_json::Value;

pub struct Live {
    pub service: Service,
    agent: ureq::Agent,
    base: String,
}

pub fn config(workers: usize, budget: SearchBudget) -> ServiceConfig {
    ServiceConfig {
        worker_count: workers,
        budget,
        listen_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        reap_interval: Duration::from_millis(50),
        ..ServiceConfig::default()
    }
}

impl Live {
    pub fn start(config: ServiceConfig) -> Live {
        let service = Service::start(&config, false).expect("service starts");
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        let base = format!("http://{}", service.addr());
        Live {
            service,
            agent,
            base,
        }
    }

    fn read(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> (u16, Value) {
        let mut resp = resp.expect("request reaches the server");
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().expect("json body"))
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        Self::read(
            self.agent
                .post(format!("{}{path}", self.base))
                .send_json(body),
        )
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        Self::read(
            self.agent
                .post(format!("{}{path}", self.base))
                .header("content-type", "application/json")
                .send(body),
        )
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        Self::read(self.agent.get(format!("{}{path}", self.base)).call())
    }

    /// Polls a job until it leaves the queue.
    pub fn wait_finished(&self, path: &str, timeout: Duration) -> Value {
        let deadline = Instant::now() + timeout;
        loop {
            let (code, body) = self.get(path);
            assert_eq!(code, 200, "{path}: {body}");
            if body["status"] == "done" || body["status"] == "failed" {
                return body;
            }
            assert!(
                Instant::now() < deadline,
                "{path} still {} after {timeout:?}",
                body["status"]
            );
            std::thread::sleep(Duration::from_millis(20));
        }
    }
}

pub fn json_of(model: &HomeModel) -> Value {
    serde_json::to_value(model).unwrap()
}

/// Distinct copies of a model, made by nudging the first import price.
pub fn variants(model: &HomeModel, count: usize) -> Vec<HomeModel> {
    (0..count)
        .map(|k| {
            let t = model.tariff();
            let mut import = t.import_prices().to_vec();
            import[0] = Price::from_milli_pence_per_kwh(import[0].milli_pence_per_kwh() + k as i64);
            model
                .with_tariff(DynamicTariff::new(import, t.export_prices().to_vec()).unwrap())
                .unwrap()
        })
        .collect()
}

pub fn alice() -> HomeModel {
    let tariff = cuttlefish_service::load_tariff(None).unwrap();
    scenarios::alice(tariff).unwrap()
}
