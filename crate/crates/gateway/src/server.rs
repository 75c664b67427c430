//! Socket service: `/ws` for teleoperation, static files at `/`.
//!
//! The tick loop task owns the session. Connections talk to it through one
//! command queue that is drained between ticks; snapshots fan out through a
//! broadcast channel.

use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::{sleep, sleep_until, Instant};
use tower_http::services::ServeDir;
use tracing::{debug, info, warn};

use crate::live::{handle_client_msg, snapshot, LiveSession};
use crate::protocol::{parse_client_message, ServerMessage};
use crate::session::{SessionError, TraceSink};

const PLACEHOLDER_PAGE: &str = "<!doctype html><title>graspctl</title>\
<p>graspctl gateway is running. Connect a client to <code>/ws</code>.</p>";

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    /// Directory served at `/`; a placeholder page when absent.
    pub static_dir: Option<PathBuf>,
}

struct Command {
    text: String,
    reply: oneshot::Sender<ServerMessage>,
}

#[derive(Clone)]
struct Shared {
    commands: mpsc::Sender<Command>,
    snapshots: broadcast::Sender<String>,
    steering_client: Arc<Mutex<Option<u64>>>,
    next_client: Arc<AtomicU64>,
}

/// Serves until `shutdown` resolves, then flushes the session trace.
pub async fn serve(
    listener: TcpListener,
    live: LiveSession,
    opts: ServerOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<TraceSink, SessionError> {
    let (cmd_tx, cmd_rx) = mpsc::channel::<Command>(256);
    let (snap_tx, _) = broadcast::channel::<String>(64);
    let (stop_tx, stop_rx) = watch::channel(false);

    let shared = Shared {
        commands: cmd_tx,
        snapshots: snap_tx.clone(),
        steering_client: Arc::new(Mutex::new(None)),
        next_client: Arc::new(AtomicU64::new(1)),
    };

    let static_service = opts.static_dir.filter(|d| d.is_dir()).map(ServeDir::new);
    let mut app = Router::new().route("/ws", get(ws_handler)).with_state(shared);
    app = match static_service {
        Some(dir) => app.fallback_service(dir),
        None => app.fallback(get(|| async { Html(PLACEHOLDER_PAGE) })),
    };

    let tick_loop = tokio::spawn(run_tick_loop(live, cmd_rx, snap_tx, stop_rx.clone()));

    if let Ok(addr) = listener.local_addr() {
        info!(%addr, "serving");
    }
    let mut server_stop = stop_rx;
    let server = axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            let _ = server_stop.wait_for(|s| *s).await;
        });
    let server = tokio::spawn(async move { server.await });

    shutdown.await;
    let _ = stop_tx.send(true);
    if let Ok(Err(e)) = server.await {
        warn!(error = %e, "server error");
    }
    let live = tick_loop.await.expect("tick loop does not panic");
    live.session.finish()
}

async fn run_tick_loop(
    mut live: LiveSession,
    mut commands: mpsc::Receiver<Command>,
    snapshots: broadcast::Sender<String>,
    mut stop: watch::Receiver<bool>,
) -> LiveSession {
    let step = Duration::from_millis(live.session.config().base_step_ms);
    let idle_period = Duration::from_secs_f64(live.session.config().rates.frame_period_ms / 1000.0);
    let mut deadline = Instant::now();

    let publish = |msg: ServerMessage| {
        // no receivers is fine
        let _ = snapshots.send(msg.to_json());
    };
    publish(ServerMessage::Snapshot(snapshot(&live)));

    loop {
        if *stop.borrow() {
            break;
        }
        if live.paused {
            tokio::select! {
                _ = stop.changed() => {}
                _ = sleep(idle_period) => publish(ServerMessage::Snapshot(snapshot(&live))),
                cmd = commands.recv() => match cmd {
                    Some(cmd) => {
                        process(&mut live, cmd, &publish);
                        deadline = Instant::now();
                    }
                    None => break,
                },
            }
        } else {
            tokio::select! {
                _ = stop.changed() => {}
                _ = sleep_until(deadline) => {
                    if let Some(snap) = live.tick() {
                        publish(snap);
                    }
                    deadline += step;
                    // after a stall, do not try to catch up in a burst
                    let now = Instant::now();
                    if deadline + step * 10 < now {
                        deadline = now;
                    }
                }
                cmd = commands.recv() => match cmd {
                    Some(cmd) => process(&mut live, cmd, &publish),
                    None => break,
                },
            }
        }
    }
    live
}

fn process(live: &mut LiveSession, cmd: Command, publish: &impl Fn(ServerMessage)) {
    let reply = match parse_client_message(&cmd.text) {
        Ok(env) => handle_client_msg(live, env),
        Err(f) => ServerMessage::error(f.reference, f.reason),
    };
    for snap in live.outbox.drain(..) {
        publish(snap);
    }
    let _ = cmd.reply.send(reply);
}

async fn ws_handler(ws: WebSocketUpgrade, State(shared): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client_session(socket, shared))
}

async fn client_session(socket: WebSocket, shared: Shared) {
    let client = shared.next_client.fetch_add(1, Ordering::Relaxed);
    let steering = {
        let mut owner = shared.steering_client.lock().expect("lock not poisoned");
        if owner.is_none() {
            *owner = Some(client);
        }
        *owner == Some(client)
    };
    info!(client, steering, "client connected");

    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::channel::<String>(64);
    let mut snaps = shared.snapshots.subscribe();

    let writer = tokio::spawn(async move {
        loop {
            let text = tokio::select! {
                msg = out_rx.recv() => match msg {
                    Some(t) => t,
                    None => break,
                },
                snap = snaps.recv() => match snap {
                    Ok(t) => t,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        debug!(client, skipped = n, "slow client skipped snapshots");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(_) => {
                let reply = ServerMessage::error(None, "binary frames are not supported");
                if out_tx.send(reply.to_json()).await.is_err() {
                    break;
                }
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = if steering {
            let (reply_tx, reply_rx) = oneshot::channel();
            if shared.commands.send(Command { text, reply: reply_tx }).await.is_err() {
                break;
            }
            match reply_rx.await {
                Ok(r) => r,
                Err(_) => break,
            }
        } else {
            let reference = parse_client_message(&text).map_or_else(|f| f.reference, |e| e.reference);
            ServerMessage::error(reference, "read-only observer: another client is steering")
        };
        if out_tx.send(reply.to_json()).await.is_err() {
            break;
        }
    }

    drop(out_tx);
    let _ = writer.await;
    if steering {
        *shared.steering_client.lock().expect("lock not poisoned") = None;
    }
    info!(client, "client disconnected");
}
