//! A local HTTP file server with a byte-rate throttle, for tests and demos.
//!
//! Every request, whatever its path, is answered with a fixed-size payload
//! (or an error status) and the connection is closed afterwards. The server
//! counts requests and records the largest number of bodies it was sending at
//! the same time.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

const CHUNK: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub payload_bytes: u64,
    /// Body rate limit; `None` sends as fast as the socket allows.
    pub bytes_per_sec: Option<f64>,
    /// Status code of every response. Non-2xx responses carry a short text body.
    pub status: u16,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            payload_bytes: 1_048_576,
            bytes_per_sec: Some(10e6),
            status: 200,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    requests: AtomicUsize,
    active: AtomicUsize,
    max_active: AtomicUsize,
}

/// Handle to a running fixture server. Stops when dropped.
pub struct ThrottledServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    counters: Arc<Counters>,
    acceptor: Option<JoinHandle<()>>,
}

impl ThrottledServer {
    /// Binds to an ephemeral localhost port and starts serving.
    pub fn start(config: FixtureConfig) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let counters = Arc::new(Counters::default());
        let config = Arc::new(config);

        let acceptor = {
            let shutdown = Arc::clone(&shutdown);
            let counters = Arc::clone(&counters);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let counters = Arc::clone(&counters);
                    let config = Arc::clone(&config);
                    thread::spawn(move || {
                        let _ = serve(stream, &config, &counters);
                    });
                }
            })
        };

        Ok(ThrottledServer {
            addr,
            shutdown,
            counters,
            acceptor: Some(acceptor),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/blob", self.addr)
    }

    /// Requests whose head was read completely.
    pub fn requests_served(&self) -> usize {
        self.counters.requests.load(Ordering::SeqCst)
    }

    /// Highest number of responses that were being written concurrently.
    pub fn max_concurrent(&self) -> usize {
        self.counters.max_active.load(Ordering::SeqCst)
    }
}

impl Drop for ThrottledServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.acceptor.take() {
            let _ = handle.join();
        }
    }
}

struct ActiveGuard<'a>(&'a Counters);

impl<'a> ActiveGuard<'a> {
    fn enter(counters: &'a Counters) -> Self {
        let now = counters.active.fetch_add(1, Ordering::SeqCst) + 1;
        counters.max_active.fetch_max(now, Ordering::SeqCst);
        ActiveGuard(counters)
    }
}

impl Drop for ActiveGuard<'_> {
    fn drop(&mut self) {
        self.0.active.fetch_sub(1, Ordering::SeqCst);
    }
}

fn serve(stream: TcpStream, config: &FixtureConfig, counters: &Counters) -> io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            // connection closed before the head ended (e.g. shutdown wake-up)
            return Ok(());
        }
        if line == "\r\n" || line == "\n" {
            break;
        }
    }
    counters.requests.fetch_add(1, Ordering::SeqCst);

    let mut stream = stream;
    if !(200..300).contains(&config.status) {
        let body = b"fixture error\n";
        write!(
            stream,
            "HTTP/1.1 {} Fixture\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            config.status,
            body.len()
        )?;
        stream.write_all(body)?;
        stream.flush()?;
        return stream.shutdown(Shutdown::Write);
    }

    let _active = ActiveGuard::enter(counters);
    write!(
        stream,
        "HTTP/1.1 {} OK\r\nContent-Type: application/octet-stream\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        config.status, config.payload_bytes
    )?;

    let chunk = [0xA5u8; CHUNK];
    let start = Instant::now();
    let mut sent: u64 = 0;
    while sent < config.payload_bytes {
        let n = (config.payload_bytes - sent).min(CHUNK as u64) as usize;
        stream.write_all(&chunk[..n])?;
        sent += n as u64;
        if let Some(rate) = config.bytes_per_sec {
            let due = Duration::from_secs_f64(sent as f64 / rate);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
    }
    stream.flush()?;
    stream.shutdown(Shutdown::Write)
}
