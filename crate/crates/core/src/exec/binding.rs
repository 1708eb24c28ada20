//! Environment bindings: where env instances get their payloads from and
//! where arriving payloads go.
//!
//! The binding mode comes from the instance config. `mode` picks one of
//! `fixture`, `console`, `file`, `tcp-server` or `tcp-client` explicitly;
//! without it, `code="print"` means console and everything else defaults
//! to a fixture with an empty script.
//!
//! Fixtures drive tests: `input` (or `input-<port>` when the env has
//! several outputs) holds a `;`-separated list of literals injected in
//! order, and `expect` holds a `;`-separated list compared against
//! arrivals in arrival order.
//!
//! TCP bindings speak a length-prefixed framing: a big-endian u32 length,
//! then the payload. Zero-length frames are legal; frames above 16 MiB are
//! rejected on both sides.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::Sender;
use std::time::{Duration, Instant};

use crate::exec::eval::{parse_literal, repr};
use crate::exec::ExecError;
use crate::graph::Instance;

pub const MAX_FRAME: usize = 16 * 1024 * 1024;

/// Write one length-prefixed frame.
pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    if payload.len() > MAX_FRAME {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {} bytes exceeds the {MAX_FRAME} byte limit", payload.len()),
        ));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Read one length-prefixed frame; `None` on a clean end of stream at a
/// frame boundary.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut header[filled..])? {
            0 if filled == 0 => return Ok(None),
            0 => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated frame header")),
            n => filled += n,
        }
    }
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds the {MAX_FRAME} byte limit"),
        ));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(payload))
}

/// How long a server socket waits for its single peer.
const ACCEPT_DEADLINE: Duration = Duration::from_secs(10);
/// How long a client retries its connect, 50ms per attempt.
const CONNECT_ATTEMPTS: u32 = 100;

pub enum EnvBinding {
    Fixture {
        scripts: BTreeMap<String, VecDeque<Vec<u8>>>,
        expects: VecDeque<Vec<u8>>,
    },
    Console,
    File {
        pending: Option<Vec<u8>>,
        sink: Option<fs::File>,
    },
    Tcp {
        stream: TcpStream,
        staged: VecDeque<Vec<u8>>,
    },
}

fn bad_config(inst: &Instance, message: impl Into<String>) -> ExecError {
    ExecError::BadConfig { instance: inst.name.clone(), message: message.into() }
}

fn io_err(inst: &Instance, source: io::Error) -> ExecError {
    ExecError::Io { instance: inst.name.clone(), source }
}

fn parse_script(inst: &Instance, text: &str) -> Result<VecDeque<Vec<u8>>, ExecError> {
    text.split(';')
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(|piece| parse_literal(piece).map_err(|e| bad_config(inst, e.to_string())))
        .collect()
}

fn fixture_binding(inst: &Instance) -> Result<EnvBinding, ExecError> {
    let mut scripts = BTreeMap::new();
    for port in &inst.outputs {
        let keyed = format!("input-{port}");
        let text = match inst.config.get(&keyed) {
            Some(text) => Some(text),
            None if inst.outputs.len() == 1 => inst.config.get("input"),
            None => None,
        };
        if let Some(text) = text {
            scripts.insert(port.clone(), parse_script(inst, text)?);
        }
    }
    if inst.config.contains_key("input") && inst.outputs.len() > 1 {
        return Err(bad_config(inst, "several output ports; use input-<port> instead of input"));
    }
    let expects = match inst.config.get("expect") {
        Some(text) => parse_script(inst, text)?,
        None => VecDeque::new(),
    };
    Ok(EnvBinding::Fixture { scripts, expects })
}

fn sole_output<'a>(inst: &'a Instance, mode: &str) -> Result<&'a str, ExecError> {
    match inst.outputs.as_slice() {
        [port] => Ok(port),
        [] => Err(bad_config(inst, format!("{mode} binding needs an output port to inject into"))),
        _ => Err(bad_config(inst, format!("{mode} binding supports exactly one output port"))),
    }
}

fn file_binding(inst: &Instance) -> Result<EnvBinding, ExecError> {
    let path = inst
        .config
        .get("path")
        .ok_or_else(|| bad_config(inst, "file binding needs a path entry"))?;
    let pending = if inst.outputs.is_empty() {
        None
    } else {
        sole_output(inst, "file")?;
        Some(fs::read(path).map_err(|e| io_err(inst, e))?)
    };
    let sink = if inst.inputs.is_empty() {
        None
    } else {
        Some(fs::File::create(path).map_err(|e| io_err(inst, e))?)
    };
    if pending.is_some() && sink.is_some() {
        return Err(bad_config(inst, "file binding cannot both read and write one path"));
    }
    Ok(EnvBinding::File { pending, sink })
}

fn tcp_addr(inst: &Instance) -> Result<String, ExecError> {
    let host = inst.config.get("host").map(String::as_str).unwrap_or("127.0.0.1");
    let port = inst
        .config
        .get("port")
        .ok_or_else(|| bad_config(inst, "tcp binding needs a port entry"))?;
    let port: u16 =
        port.parse().map_err(|_| bad_config(inst, format!("bad tcp port {port:?}")))?;
    Ok(format!("{host}:{port}"))
}

fn tcp_server(inst: &Instance) -> Result<TcpStream, ExecError> {
    let addr = tcp_addr(inst)?;
    let listener = TcpListener::bind(&addr).map_err(|e| io_err(inst, e))?;
    listener.set_nonblocking(true).map_err(|e| io_err(inst, e))?;
    let deadline = Instant::now() + ACCEPT_DEADLINE;
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false).map_err(|e| io_err(inst, e))?;
                return Ok(stream);
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(bad_config(inst, format!("no peer connected to {addr}")));
                }
                std::thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(io_err(inst, e)),
        }
    }
}

fn tcp_client(inst: &Instance) -> Result<TcpStream, ExecError> {
    let addr = tcp_addr(inst)?;
    let mut last = None;
    for _ in 0..CONNECT_ATTEMPTS {
        match TcpStream::connect(&addr) {
            Ok(stream) => return Ok(stream),
            Err(e) => {
                last = Some(e);
                std::thread::sleep(Duration::from_millis(50));
            }
        }
    }
    Err(io_err(inst, last.expect("at least one attempt")))
}

fn tcp_binding(
    inst: &Instance,
    server: bool,
    injector: &Sender<(String, Vec<u8>)>,
) -> Result<EnvBinding, ExecError> {
    let stream = if server { tcp_server(inst)? } else { tcp_client(inst)? };
    if !inst.outputs.is_empty() {
        sole_output(inst, "tcp")?;
        let mut reader = stream.try_clone().map_err(|e| io_err(inst, e))?;
        let name = inst.name.clone();
        let tx = injector.clone();
        std::thread::spawn(move || {
            while let Ok(Some(payload)) = read_frame(&mut reader) {
                if tx.send((name.clone(), payload)).is_err() {
                    break;
                }
            }
        });
    }
    Ok(EnvBinding::Tcp { stream, staged: VecDeque::new() })
}

/// Resolve the binding mode and build the binding. TCP bindings connect
/// here and spawn their reader thread feeding the shared injector.
pub fn make_binding(
    inst: &Instance,
    injector: &Sender<(String, Vec<u8>)>,
) -> Result<EnvBinding, ExecError> {
    let mode = match inst.config.get("mode").map(String::as_str) {
        Some(mode) => mode,
        None if inst.config.get("code").map(String::as_str) == Some("print") => "console",
        None => "fixture",
    };
    match mode {
        "fixture" => fixture_binding(inst),
        "console" => Ok(EnvBinding::Console),
        "file" => file_binding(inst),
        "tcp-server" => tcp_binding(inst, true, injector),
        "tcp-client" => tcp_binding(inst, false, injector),
        other => Err(bad_config(inst, format!("unknown binding mode {other:?}"))),
    }
}

impl EnvBinding {
    /// Take the next payload to inject on `port`, if one is ready.
    pub fn pop_injectable(&mut self, port: &str) -> Option<Vec<u8>> {
        match self {
            EnvBinding::Fixture { scripts, .. } => scripts.get_mut(port)?.pop_front(),
            EnvBinding::Console => None,
            EnvBinding::File { pending, .. } => pending.take(),
            EnvBinding::Tcp { staged, .. } => staged.pop_front(),
        }
    }

    /// Queue a payload received from this binding's socket.
    pub fn stage(&mut self, payload: Vec<u8>) {
        if let EnvBinding::Tcp { staged, .. } = self {
            staged.push_back(payload);
        }
    }

    /// Hand an arriving payload to the environment.
    pub fn on_arrival(
        &mut self,
        inst: &Instance,
        port: &str,
        payload: &[u8],
        mismatches: &mut Vec<String>,
    ) -> Result<(), ExecError> {
        match self {
            EnvBinding::Fixture { expects, .. } => {
                if let Some(expected) = expects.pop_front() {
                    if expected != payload {
                        mismatches.push(format!(
                            "{}.{}: expected {}, got {}",
                            inst.name,
                            port,
                            repr(&expected),
                            repr(payload)
                        ));
                    }
                }
                Ok(())
            }
            EnvBinding::Console => {
                println!("RECV {}.{} {}", inst.name, port, repr(payload));
                Ok(())
            }
            EnvBinding::File { sink, .. } => match sink {
                Some(file) => file.write_all(payload).map_err(|e| io_err(inst, e)),
                None => Err(bad_config(inst, "file binding has no sink for arrivals")),
            },
            EnvBinding::Tcp { stream, .. } => write_frame(stream, payload).map_err(|e| io_err(inst, e)),
        }
    }

    /// Report script material that never got used.
    pub fn finish(&mut self, inst: &Instance, mismatches: &mut Vec<String>) {
        if let EnvBinding::Fixture { scripts, expects } = self {
            for (port, queue) in scripts {
                if !queue.is_empty() {
                    mismatches.push(format!(
                        "{}.{}: {} scripted values not injected",
                        inst.name,
                        port,
                        queue.len()
                    ));
                }
            }
            for expected in expects.iter() {
                mismatches.push(format!(
                    "{}: expected {} did not arrive",
                    inst.name,
                    repr(expected)
                ));
            }
        }
    }
}
