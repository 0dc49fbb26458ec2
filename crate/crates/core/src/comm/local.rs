//! In-process world: every rank is a future over a shared mailbox.

use std::collections::{HashMap, VecDeque};
use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::task::{Context, Poll, Waker};

use num_complex::Complex64;

use super::{Comm, Transport, TransportError};
use crate::error::{config, Error, Result};

/// How the ranks of a [`LocalWorld`] are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// One thread polls every rank round-robin in rank order.
    #[default]
    Sequential,
    /// One OS thread per rank.
    Threaded,
}

#[derive(Default)]
struct Mail {
    queues: HashMap<(usize, usize, u32), VecDeque<Vec<Complex64>>>,
    wakers: Vec<Option<Waker>>,
}

struct Shared {
    size: usize,
    mail: Mutex<Mail>,
    aborted: AtomicBool,
    progress: AtomicU64,
    pair_counts: Mutex<Vec<u64>>,
    sent: Vec<AtomicU64>,
}

impl Shared {
    fn mail(&self) -> MutexGuard<'_, Mail> {
        self.mail.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn abort(&self) {
        self.aborted.store(true, Ordering::SeqCst);
        let wakers: Vec<Waker> = self.mail().wakers.iter_mut().filter_map(Option::take).collect();
        wakers.into_iter().for_each(Waker::wake);
    }
}

struct LocalTransport {
    rank: usize,
    shared: Arc<Shared>,
}

impl Transport for LocalTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.shared.size
    }

    fn send(&self, dest: usize, tag: u32, payload: Vec<Complex64>) -> Result<(), TransportError> {
        let shared = &self.shared;
        if dest >= shared.size {
            return Err(TransportError::PeerOutOfRange {
                peer: dest,
                size: shared.size,
            });
        }
        if shared.aborted.load(Ordering::SeqCst) {
            return Err(TransportError::Aborted);
        }
        let waker = {
            let mut mail = shared.mail();
            mail.queues
                .entry((self.rank, dest, tag))
                .or_default()
                .push_back(payload);
            mail.wakers[dest].take()
        };
        shared.pair_counts.lock().unwrap_or_else(|e| e.into_inner())[self.rank * shared.size + dest] += 1;
        shared.sent[self.rank].fetch_add(1, Ordering::SeqCst);
        shared.progress.fetch_add(1, Ordering::SeqCst);
        if let Some(w) = waker {
            w.wake();
        }
        Ok(())
    }

    fn poll_recv(
        &self,
        src: usize,
        tag: u32,
        cx: &mut Context<'_>,
    ) -> Poll<Result<Vec<Complex64>, TransportError>> {
        let shared = &self.shared;
        if src >= shared.size {
            return Poll::Ready(Err(TransportError::PeerOutOfRange {
                peer: src,
                size: shared.size,
            }));
        }
        let mut mail = shared.mail();
        if let Some(msg) = mail
            .queues
            .get_mut(&(src, self.rank, tag))
            .and_then(VecDeque::pop_front)
        {
            shared.progress.fetch_add(1, Ordering::SeqCst);
            return Poll::Ready(Ok(msg));
        }
        if shared.aborted.load(Ordering::SeqCst) {
            return Poll::Ready(Err(TransportError::Aborted));
        }
        mail.wakers[self.rank] = Some(cx.waker().clone());
        Poll::Pending
    }

    fn sent_messages(&self) -> u64 {
        self.shared.sent[self.rank].load(Ordering::SeqCst)
    }
}

/// Per rank-pair message counts of a [`LocalWorld`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStats {
    size: usize,
    counts: Vec<u64>,
}

impl MessageStats {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn between(&self, src: usize, dest: usize) -> u64 {
        self.counts[src * self.size + dest]
    }

    /// Messages whose endpoints fall in different contiguous groups.
    pub fn cross_group(&self, group_count: usize) -> u64 {
        let per_group = (self.size / group_count.max(1)).max(1);
        let mut n = 0;
        for src in 0..self.size {
            for dest in 0..self.size {
                if src / per_group != dest / per_group {
                    n += self.between(src, dest);
                }
            }
        }
        n
    }
}

/// A world of `2^p` ranks living in this process.
pub struct LocalWorld {
    shared: Arc<Shared>,
}

impl LocalWorld {
    pub fn new(size: usize) -> Result<Self> {
        if !size.is_power_of_two() {
            return Err(config(format!("rank count {size} is not a power of two")));
        }
        let mail = Mail {
            queues: HashMap::new(),
            wakers: vec![None; size],
        };
        Ok(LocalWorld {
            shared: Arc::new(Shared {
                size,
                mail: Mutex::new(mail),
                aborted: AtomicBool::new(false),
                progress: AtomicU64::new(0),
                pair_counts: Mutex::new(vec![0; size * size]),
                sent: (0..size).map(|_| AtomicU64::new(0)).collect(),
            }),
        })
    }

    pub fn size(&self) -> usize {
        self.shared.size
    }

    /// Snapshot of message counts accumulated over all runs so far.
    pub fn stats(&self) -> MessageStats {
        MessageStats {
            size: self.shared.size,
            counts: self
                .shared
                .pair_counts
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .clone(),
        }
    }

    /// Run the rank program `f` on every rank and collect the results in
    /// rank order.
    ///
    /// If any rank fails, the others are aborted and the first failure (in
    /// rank order, ignoring secondary aborts) is returned.
    pub fn run<T, F, Fut>(&self, schedule: Schedule, f: F) -> Result<Vec<T>>
    where
        F: Fn(Comm) -> Fut + Sync,
        Fut: Future<Output = Result<T>>,
        T: Send,
    {
        self.reset();
        let comm_for = |rank| {
            Comm::world(Arc::new(LocalTransport {
                rank,
                shared: Arc::clone(&self.shared),
            }))
        };
        let (results, deadlocked) = match schedule {
            Schedule::Sequential => {
                self.run_sequential((0..self.size()).map(|r| f(comm_for(r))).collect())
            }
            Schedule::Threaded => (self.run_threaded(&f, &comm_for), false),
        };
        match collect(results) {
            Err(e) if deadlocked && is_abort(&e) => Err(TransportError::Deadlock.into()),
            other => other,
        }
    }

    fn reset(&self) {
        self.shared.aborted.store(false, Ordering::SeqCst);
        let mut mail = self.shared.mail();
        mail.queues.clear();
        mail.wakers.iter_mut().for_each(|w| *w = None);
    }

    fn run_sequential<T, Fut>(&self, futures: Vec<Fut>) -> (Vec<Result<T>>, bool)
    where
        Fut: Future<Output = Result<T>>,
    {
        let mut pending: Vec<Option<Pin<Box<Fut>>>> =
            futures.into_iter().map(|f| Some(Box::pin(f))).collect();
        let mut results: Vec<Option<Result<T>>> = pending.iter().map(|_| None).collect();
        let mut cx = Context::from_waker(Waker::noop());
        let mut deadlocked = false;
        loop {
            let before = self.shared.progress.load(Ordering::SeqCst);
            let mut finished = false;
            for (slot, result) in pending.iter_mut().zip(results.iter_mut()) {
                let Some(fut) = slot else { continue };
                if let Poll::Ready(out) = fut.as_mut().poll(&mut cx) {
                    if out.is_err() {
                        self.shared.abort();
                    }
                    *result = Some(out);
                    *slot = None;
                    finished = true;
                }
            }
            if pending.iter().all(Option::is_none) {
                break;
            }
            if !finished && self.shared.progress.load(Ordering::SeqCst) == before {
                deadlocked = true;
                self.shared.abort();
            }
        }
        let out = results.into_iter().map(|r| r.expect("rank finished")).collect();
        (out, deadlocked)
    }

    fn run_threaded<T, F, Fut, C>(&self, f: &F, comm_for: &C) -> Vec<Result<T>>
    where
        F: Fn(Comm) -> Fut + Sync,
        Fut: Future<Output = Result<T>>,
        T: Send,
        C: Fn(usize) -> Comm + Sync,
    {
        struct AbortOnPanic<'a>(&'a Shared);
        impl Drop for AbortOnPanic<'_> {
            fn drop(&mut self) {
                if std::thread::panicking() {
                    self.0.abort();
                }
            }
        }

        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..self.size())
                .map(|rank| {
                    let shared = &*self.shared;
                    scope.spawn(move || {
                        let _guard = AbortOnPanic(shared);
                        let out = futures::executor::block_on(f(comm_for(rank)));
                        if out.is_err() {
                            shared.abort();
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        })
    }
}

fn is_abort(e: &Error) -> bool {
    matches!(e, Error::Transport(TransportError::Aborted))
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    if results.iter().any(Result::is_err) {
        let mut errors: Vec<Error> = results.into_iter().filter_map(Result::err).collect();
        let first = errors.iter().position(|e| !is_abort(e)).unwrap_or(0);
        return Err(errors.swap_remove(first));
    }
    Ok(results.into_iter().map(|r| r.expect("checked")).collect())
}
