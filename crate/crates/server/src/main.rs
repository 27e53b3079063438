use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use axum::http::HeaderValue;
use clap::Parser;
use contra_server::{router, SessionState};

#[derive(Debug, Parser)]
#[command(
    name = "contra-server",
    version,
    about = "Serve precomputed contra-plot summaries over HTTP"
)]
struct Args {
    /// Study table scored at startup; without one the API serves no studies.
    #[arg(long, value_name = "PATH")]
    fixture: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    bind: IpAddr,
    #[arg(long, default_value_t = contra_core::posterior::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, env = "CONTRA_SEED", default_value_t = contra_core::analysis::DEFAULT_SEED)]
    seed: u64,
    /// Browser origin allowed to call the API (repeatable).
    #[arg(long, value_name = "ORIGIN")]
    cors_origin: Vec<HeaderValue>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let state = match &args.fixture {
        Some(path) => match SessionState::load(path, args.samples, args.seed) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => {
            log::warn!("no fixture given; serving an empty table");
            SessionState::empty(args.samples, args.seed)
        }
    };
    log::info!(
        "{} studies from {} (sha256 {}), k = {}, seed = {}",
        state.entries.len(),
        state.fixture_name.as_deref().unwrap_or("-"),
        state.fingerprint,
        state.k,
        state.seed
    );

    let app = router(Arc::new(state), &args.cors_origin);
    let addr = SocketAddr::new(args.bind, args.port);
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let served = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {addr}: {e}");
            ExitCode::FAILURE
        }
    }
}
