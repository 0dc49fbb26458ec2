//! Multi-process transport over local TCP sockets.
//!
//! Every rank listens on its own address and holds one stream per peer.
//! A reader thread per peer drains incoming frames into a shared inbox, so
//! sends never wait on the receiver. Receives block the calling thread,
//! which is fine because a socket rank runs alone in its process.

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::task::{Context, Poll};
use std::thread;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use super::wire::{read_frame, write_frame};
use super::{Transport, TransportError};

#[derive(Default)]
struct InboxState {
    queues: HashMap<(usize, u32), VecDeque<Vec<Complex64>>>,
    closed: Vec<bool>,
}

#[derive(Default)]
struct Inbox {
    state: Mutex<InboxState>,
    ready: Condvar,
}

impl Inbox {
    fn push(&self, src: usize, tag: u32, payload: Vec<Complex64>) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.queues.entry((src, tag)).or_default().push_back(payload);
        self.ready.notify_all();
    }

    fn close(&self, src: usize) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.closed[src] = true;
        self.ready.notify_all();
    }
}

pub struct SocketTransport {
    rank: usize,
    size: usize,
    writers: Vec<Option<Mutex<TcpStream>>>,
    inbox: Arc<Inbox>,
    sent: AtomicU64,
}

impl SocketTransport {
    /// Bind `addrs[rank]` and connect to every other rank's address.
    pub fn connect(
        rank: usize,
        addrs: &[SocketAddr],
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let listener = TcpListener::bind(addrs[rank])?;
        Self::with_listener(rank, listener, addrs, timeout)
    }

    /// Like [`connect`](Self::connect) with an already bound listener.
    ///
    /// Rank `r` dials every lower rank and accepts every higher one; the
    /// dialer announces its rank as a little-endian `u32`.
    pub fn with_listener(
        rank: usize,
        listener: TcpListener,
        addrs: &[SocketAddr],
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let size = addrs.len();
        if rank >= size {
            return Err(TransportError::PeerOutOfRange { peer: rank, size });
        }
        let deadline = Instant::now() + timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..size).map(|_| None).collect();

        for (peer, addr) in addrs.iter().enumerate().take(rank) {
            let mut stream = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) if Instant::now() >= deadline => return Err(e.into()),
                    Err(_) => thread::sleep(Duration::from_millis(20)),
                }
            };
            stream.write_all(&(rank as u32).to_le_bytes())?;
            streams[peer] = Some(stream);
        }

        listener.set_nonblocking(true)?;
        let mut accepted = 0;
        while accepted < size - rank - 1 {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false)?;
                    let mut id = [0u8; 4];
                    stream.read_exact(&mut id)?;
                    let peer = u32::from_le_bytes(id) as usize;
                    if peer <= rank || peer >= size || streams[peer].is_some() {
                        return Err(TransportError::Protocol(format!(
                            "unexpected handshake from rank {peer}"
                        )));
                    }
                    streams[peer] = Some(stream);
                    accepted += 1;
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(TransportError::Protocol(format!(
                            "rank {rank} timed out waiting for peers"
                        )));
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }

        let inbox = Arc::new(Inbox::default());
        inbox.state.lock().unwrap_or_else(|e| e.into_inner()).closed = vec![false; size];
        let mut writers = Vec::with_capacity(size);
        for (peer, stream) in streams.into_iter().enumerate() {
            let Some(stream) = stream else {
                writers.push(None);
                continue;
            };
            stream.set_nodelay(true)?;
            let mut reader = stream.try_clone()?;
            let inbox = Arc::clone(&inbox);
            thread::spawn(move || {
                while let Ok(Some((tag, payload))) = read_frame(&mut reader) {
                    inbox.push(peer, tag, payload);
                }
                inbox.close(peer);
            });
            writers.push(Some(Mutex::new(stream)));
        }

        Ok(SocketTransport {
            rank,
            size,
            writers,
            inbox,
            sent: AtomicU64::new(0),
        })
    }
}

impl Transport for SocketTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn send(&self, dest: usize, tag: u32, payload: Vec<Complex64>) -> Result<(), TransportError> {
        if dest >= self.size {
            return Err(TransportError::PeerOutOfRange {
                peer: dest,
                size: self.size,
            });
        }
        match &self.writers[dest] {
            None => self.inbox.push(self.rank, tag, payload),
            Some(stream) => {
                let mut stream = stream.lock().unwrap_or_else(|e| e.into_inner());
                write_frame(&mut *stream, tag, &payload)?;
            }
        }
        self.sent.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    fn poll_recv(
        &self,
        src: usize,
        tag: u32,
        _cx: &mut Context<'_>,
    ) -> Poll<Result<Vec<Complex64>, TransportError>> {
        if src >= self.size {
            return Poll::Ready(Err(TransportError::PeerOutOfRange {
                peer: src,
                size: self.size,
            }));
        }
        let mut state = self.inbox.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(msg) = state.queues.get_mut(&(src, tag)).and_then(VecDeque::pop_front) {
                return Poll::Ready(Ok(msg));
            }
            if state.closed[src] {
                return Poll::Ready(Err(TransportError::Disconnected(src)));
            }
            state = self.inbox.ready.wait(state).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn sent_messages(&self) -> u64 {
        self.sent.load(Ordering::SeqCst)
    }
}

impl Drop for SocketTransport {
    fn drop(&mut self) {
        for stream in self.writers.iter().flatten() {
            let stream = stream.lock().unwrap_or_else(|e| e.into_inner());
            let _ = stream.shutdown(Shutdown::Write);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::Comm;

    #[test]
    fn socket_ranks_exchange_and_gather() {
        let size = 4;
        let listeners: Vec<TcpListener> = (0..size)
            .map(|_| TcpListener::bind("127.0.0.1:0").unwrap())
            .collect();
        let addrs: Vec<SocketAddr> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
        let results: Vec<_> = thread::scope(|s| {
            let handles: Vec<_> = listeners
                .into_iter()
                .enumerate()
                .map(|(rank, listener)| {
                    let addrs = addrs.clone();
                    s.spawn(move || {
                        let t = SocketTransport::with_listener(rank, listener, &addrs, Duration::from_secs(10))
                            .unwrap();
                        let comm = Comm::world(Arc::new(t));
                        futures::executor::block_on(async {
                            let peer = comm.rank() ^ 1;
                            let got = comm
                                .exchange(peer, vec![Complex64::new(comm.rank() as f64, 0.5); 3])
                                .await
                                .unwrap();
                            let all = comm.allgather(vec![Complex64::new(comm.rank() as f64, 0.0)]).await.unwrap();
                            (got, all, comm.sent_messages())
                        })
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (rank, (got, all, sent)) in results.into_iter().enumerate() {
            assert_eq!(got, vec![Complex64::new((rank ^ 1) as f64, 0.5); 3]);
            assert_eq!(all.iter().map(|c| c.re).collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 3.0]);
            assert!(sent >= 2);
        }
    }
}
