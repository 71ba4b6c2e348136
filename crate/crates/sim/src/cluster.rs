//! Node actors on their own threads, reachable over in-process channels or
//! one TCP stream per node.

use std::io::{self, BufReader, BufWriter, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::node::{Fault, NodeState, Reply};
use crate::wire::{WireError, WireMessage};
use crate::SessionError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Transport {
    #[default]
    InProcess,
    /// One listener per node. Missing entries default to `127.0.0.1:0`.
    Socket { listen: Vec<SocketAddr> },
}

impl Transport {
    pub fn socket() -> Self {
        Transport::Socket { listen: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterConfig {
    pub transport: Transport,
    pub timeout: Duration,
    /// `(node, fault)` pairs, node 0-based.
    pub faults: Vec<(usize, Fault)>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { transport: Transport::InProcess, timeout: Duration::from_secs(5), faults: Vec::new() }
    }
}

impl ClusterConfig {
    pub fn with_transport(transport: Transport) -> Self {
        Self { transport, ..Self::default() }
    }

    fn fault_for(&self, node: usize) -> Fault {
        self.faults.iter().rev().find(|(n, _)| *n == node).map(|(_, f)| *f).unwrap_or_default()
    }
}

enum Link {
    Channel { tx: Option<Sender<Vec<u8>>>, rx: Receiver<Vec<u8>> },
    Socket { writer: BufWriter<TcpStream>, reader: BufReader<TcpStream> },
}

impl Link {
    fn send(&mut self, node: usize, bytes: &[u8]) -> Result<(), SessionError> {
        match self {
            Link::Channel { tx, .. } => {
                tx.as_ref().and_then(|tx| tx.send(bytes.to_vec()).ok()).ok_or(SessionError::Disconnected { node })
            }
            Link::Socket { writer, .. } => {
                use std::io::Write;
                writer.write_all(bytes).and_then(|_| writer.flush()).map_err(|e| io_error(node, e))
            }
        }
    }

    fn recv(&mut self, node: usize, timeout: Duration) -> Result<WireMessage, SessionError> {
        match self {
            Link::Channel { rx, .. } => {
                let bytes = rx.recv_timeout(timeout).map_err(|e| match e {
                    RecvTimeoutError::Timeout => SessionError::Timeout { node },
                    RecvTimeoutError::Disconnected => SessionError::Disconnected { node },
                })?;
                WireMessage::decode(&bytes).map_err(|source| SessionError::Malformed { node, source })
            }
            Link::Socket { reader, .. } => {
                reader.get_ref().set_read_timeout(Some(timeout)).map_err(|e| io_error(node, e))?;
                WireMessage::read_from(reader).map_err(|e| match e {
                    WireError::Io(e) => io_error(node, e),
                    source => SessionError::Malformed { node, source },
                })
            }
        }
    }

    fn close(&mut self) {
        match self {
            Link::Channel { tx, .. } => drop(tx.take()),
            Link::Socket { writer, .. } => {
                let _ = writer.get_ref().shutdown(std::net::Shutdown::Both);
            }
        }
    }
}

fn io_error(node: usize, e: io::Error) -> SessionError {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => SessionError::Timeout { node },
        ErrorKind::UnexpectedEof
        | ErrorKind::ConnectionReset
        | ErrorKind::ConnectionAborted
        | ErrorKind::BrokenPipe => SessionError::Disconnected { node },
        _ => SessionError::Io { node, message: e.to_string() },
    }
}

/// `K` running node actors and the client's end of each link.
pub struct Cluster {
    links: Vec<Link>,
    handles: Vec<JoinHandle<()>>,
    timeout: Duration,
}

impl Cluster {
    pub fn start(nodes: usize, config: &ClusterConfig) -> Result<Self, SessionError> {
        let mut links = Vec::with_capacity(nodes);
        let mut handles = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let state = NodeState::new(node as u16, config.fault_for(node));
            let (link, handle) = match &config.transport {
                Transport::InProcess => spawn_channel(state),
                Transport::Socket { listen } => {
                    let addr = listen.get(node).copied().unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], 0)));
                    spawn_socket(state, addr).map_err(|e| io_error(node, e))?
                }
            };
            links.push(link);
            handles.push(handle);
        }
        Ok(Self { links, handles, timeout: config.timeout })
    }

    pub fn nodes(&self) -> usize {
        self.links.len()
    }

    pub fn send(&mut self, node: usize, msg: &WireMessage) -> Result<(), SessionError> {
        let bytes = msg.encode().map_err(|source| SessionError::Malformed { node, source })?;
        self.send_raw(node, &bytes)
    }

    pub fn send_raw(&mut self, node: usize, bytes: &[u8]) -> Result<(), SessionError> {
        self.links[node].send(node, bytes)
    }

    pub fn recv(&mut self, node: usize) -> Result<WireMessage, SessionError> {
        let timeout = self.timeout;
        self.links[node].recv(node, timeout)
    }
}

impl Drop for Cluster {
    fn drop(&mut self) {
        for link in &mut self.links {
            link.close();
        }
        for (link, handle) in self.links.drain(..).zip(self.handles.drain(..)) {
            drop(link);
            // A hung node still exits once its link closes.
            let _ = handle.join();
        }
    }
}

fn spawn_channel(mut state: NodeState) -> (Link, JoinHandle<()>) {
    let (to_node, node_rx) = mpsc::channel::<Vec<u8>>();
    let (node_tx, from_node) = mpsc::channel::<Vec<u8>>();
    let handle = thread::spawn(move || {
        for bytes in node_rx {
            match state.handle(&bytes) {
                Reply::Send(out) => {
                    if node_tx.send(out).is_err() {
                        return;
                    }
                }
                Reply::Nothing => {}
                Reply::Exit => return,
            }
        }
    });
    (Link::Channel { tx: Some(to_node), rx: from_node }, handle)
}

fn spawn_socket(mut state: NodeState, addr: SocketAddr) -> io::Result<(Link, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let handle = thread::spawn(move || {
        let Ok((stream, _)) = listener.accept() else { return };
        let Ok(write_half) = stream.try_clone() else { return };
        let mut reader = BufReader::new(stream);
        let mut writer = BufWriter::new(write_half);
        loop {
            // Frames are read whole so a bad one can be answered with ERROR.
            let bytes = match read_frame_bytes(&mut reader) {
                Ok(b) => b,
                Err(_) => return,
            };
            match state.handle(&bytes) {
                Reply::Send(out) => {
                    use std::io::Write;
                    if writer.write_all(&out).and_then(|_| writer.flush()).is_err() {
                        return;
                    }
                }
                Reply::Nothing => {}
                Reply::Exit => return,
            }
        }
    });
    let stream = TcpStream::connect(local)?;
    stream.set_nodelay(true)?;
    let writer = BufWriter::new(stream.try_clone()?);
    Ok((Link::Socket { writer, reader: BufReader::new(stream) }, handle))
}

fn read_frame_bytes<R: io::Read>(r: &mut R) -> io::Result<Vec<u8>> {
    use crate::wire::{HEADER_LEN, MAX_PAYLOAD};
    let mut bytes = vec![0u8; HEADER_LEN];
    r.read_exact(&mut bytes)?;
    let len = u32::from_be_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]);
    if len > MAX_PAYLOAD {
        return Err(io::Error::new(ErrorKind::InvalidData, "oversized frame"));
    }
    bytes.resize(HEADER_LEN + len as usize, 0);
    r.read_exact(&mut bytes[HEADER_LEN..])?;
    Ok(bytes)
}
