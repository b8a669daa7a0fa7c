//! Paced simulation loop with a WebSocket endpoint for console clients.
//!
//! The loop owns the simulation. Clients read the latest snapshot from a
//! watch channel, so a slow client skips snapshots instead of holding the
//! clock back. Commands travel through a queue and are applied at the next
//! tick boundary; each carries a oneshot for its ack.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::{mpsc, oneshot, watch};

use fleetsim_core::engine::{EngineError, RunSummary, Sim};
use fleetsim_core::log::EventLog;
use fleetsim_core::proto::CommandResult;

use crate::protocol::{parse_client, Ack, ClientMessage, CommandRequest, Hello, Rejection, ServerMessage};

pub const SNAPSHOT_PERIOD: Duration = Duration::from_millis(100);

/// Pause after the run ends so clients can read the final snapshot.
const LINGER: Duration = Duration::from_millis(300);

struct Pending {
    request: CommandRequest,
    reply: oneshot::Sender<CommandResult>,
}

#[derive(Clone)]
struct Shared {
    hello: Arc<String>,
    snapshots: watch::Receiver<Arc<String>>,
    commands: mpsc::Sender<Pending>,
}

/// Handle to a running server.
pub struct Running {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    sim: tokio::task::JoinHandle<Result<(RunSummary, EventLog), EngineError>>,
    server: tokio::task::JoinHandle<()>,
}

impl Running {
    /// Asks the simulation to end at the next tick.
    pub fn stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    /// Waits for the run to end and the endpoint to close.
    pub async fn wait(self) -> Result<(RunSummary, EventLog), EngineError> {
        let out = self.sim.await.expect("simulation task panicked");
        let _ = self.server.await;
        out
    }
}

fn snapshot_text(sim: &Sim) -> Arc<String> {
    Arc::new(ServerMessage::Snapshot(Box::new(sim.snapshot())).to_text())
}

fn sim_loop(
    mut sim: Sim,
    speed: f64,
    stop: Arc<AtomicBool>,
    mut commands: mpsc::Receiver<Pending>,
    snapshots: watch::Sender<Arc<String>>,
) -> Result<(RunSummary, EventLog), EngineError> {
    let start = Instant::now();
    let mut next_publish = SNAPSHOT_PERIOD;
    while !sim.finished() && !stop.load(Ordering::SeqCst) {
        while let Ok(p) = commands.try_recv() {
            let result = sim.command(p.request.command, &p.request.operator)?;
            let _ = p.reply.send(result);
        }
        sim.step()?;
        let elapsed = start.elapsed();
        if elapsed >= next_publish {
            snapshots.send_replace(snapshot_text(&sim));
            while next_publish <= elapsed {
                next_publish += SNAPSHOT_PERIOD;
            }
        }
        let target = Duration::from_secs_f64(sim.time() / speed);
        if let Some(wait) = target.checked_sub(start.elapsed()) {
            std::thread::sleep(wait);
        }
    }
    commands.close();
    while let Ok(p) = commands.try_recv() {
        let _ = p.reply.send(CommandResult::Rejected {
            reason: "finished".into(),
        });
    }
    snapshots.send_replace(snapshot_text(&sim));
    sim.finish()
}

async fn ws_handler(ws: WebSocketUpgrade, State(shared): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(mut socket: WebSocket, shared: Shared) {
    let Shared {
        hello,
        mut snapshots,
        commands,
    } = shared;
    if socket.send(Message::Text(hello.as_str().into())).await.is_err() {
        return;
    }
    let first = snapshots.borrow_and_update().clone();
    if socket.send(Message::Text(first.as_str().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            changed = snapshots.changed() => {
                if changed.is_err() {
                    let last = snapshots.borrow().clone();
                    let _ = socket.send(Message::Text(last.as_str().into())).await;
                    return;
                }
                let text = snapshots.borrow_and_update().clone();
                if socket.send(Message::Text(text.as_str().into())).await.is_err() {
                    return;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let reply = match parse_client(text.as_str()) {
                    Err(e) => ServerMessage::Error(e),
                    Ok(ClientMessage::Command(request)) => submit(&commands, request).await,
                };
                if socket.send(Message::Text(reply.to_text().into())).await.is_err() {
                    return;
                }
            }
        }
    }
}

async fn submit(commands: &mpsc::Sender<Pending>, request: CommandRequest) -> ServerMessage {
    let id = request.id.clone();
    let (tx, rx) = oneshot::channel();
    let finished = || {
        ServerMessage::Rejected(Rejection {
            id: id.clone(),
            reason: "finished".into(),
        })
    };
    if commands.send(Pending { request, reply: tx }).await.is_err() {
        return finished();
    }
    match rx.await {
        Ok(CommandResult::Ack) => ServerMessage::Ack(Ack { id }),
        Ok(CommandResult::Rejected { reason }) => ServerMessage::Rejected(Rejection { id, reason }),
        Err(_) => finished(),
    }
}

/// Binds the endpoint and starts the paced simulation.
pub async fn start(sim: Sim, bind: SocketAddr, speed: f64) -> std::io::Result<Running> {
    let listener = TcpListener::bind(bind).await?;
    let addr = listener.local_addr()?;
    let hello = ServerMessage::Hello(Hello {
        scenario: sim.config().name.clone(),
        seed: sim.seed(),
        timestep: sim.config().timestep,
        speed,
        snapshot_hz: 1.0 / SNAPSHOT_PERIOD.as_secs_f64(),
    })
    .to_text();
    let (snap_tx, snap_rx) = watch::channel(snapshot_text(&sim));
    let (cmd_tx, cmd_rx) = mpsc::channel(64);
    let shared = Shared {
        hello: Arc::new(hello),
        snapshots: snap_rx,
        commands: cmd_tx,
    };
    let app = Router::new().route("/ws", get(ws_handler)).with_state(shared);
    let stop = Arc::new(AtomicBool::new(false));
    let (done_tx, done_rx) = oneshot::channel::<()>();
    let loop_stop = stop.clone();
    let sim = tokio::task::spawn_blocking(move || {
        let out = sim_loop(sim, speed, loop_stop, cmd_rx, snap_tx);
        std::thread::sleep(LINGER);
        let _ = done_tx.send(());
        out
    });
    let server = tokio::spawn(async move {
        let shutdown = async {
            let _ = done_rx.await;
        };
        if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            tracing::error!("console endpoint failed: {e}");
        }
    });
    tracing::info!("console endpoint on ws://{addr}/ws");
    Ok(Running { addr, stop, sim, server })
}
