//! Per-session event stream. Every subscriber has its own bounded queue; when
//! it is full the oldest `state` frame is dropped, other events never are.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex, Weak};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Notify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    State,
    Error,
    Program,
    Scenario,
    ResultsInvalidated,
    RunQueued,
    RunStarted,
    Progress,
    RunCompleted,
    RunFailed,
}

impl EventKind {
    fn droppable(self) -> bool {
        matches!(self, EventKind::State)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Unix time, ms.
    pub ts: u64,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub payload: Value,
}

pub const DEFAULT_QUEUE_CAPACITY: usize = 256;

struct Queue {
    events: Mutex<VecDeque<Event>>,
    notify: Notify,
}

struct HubInner {
    next_seq: u64,
    subscribers: Vec<Weak<Queue>>,
}

pub struct EventHub {
    inner: Mutex<HubInner>,
    capacity: usize,
}

impl Default for EventHub {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_QUEUE_CAPACITY)
    }
}

impl EventHub {
    pub fn with_capacity(capacity: usize) -> Self {
        Self { inner: Mutex::new(HubInner { next_seq: 1, subscribers: vec![] }), capacity: capacity.max(1) }
    }

    pub fn subscribe(&self) -> Subscriber {
        let queue = Arc::new(Queue { events: Mutex::new(VecDeque::new()), notify: Notify::new() });
        self.inner.lock().unwrap().subscribers.push(Arc::downgrade(&queue));
        Subscriber { queue }
    }

    /// Stamp and fan out an event. Returns its sequence number.
    pub fn publish(&self, kind: EventKind, payload: Value) -> u64 {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        let mut inner = self.inner.lock().unwrap();
        let event = Event { seq: inner.next_seq, ts, kind, payload };
        inner.next_seq += 1;
        inner.subscribers.retain(|w| w.strong_count() > 0);
        for queue in inner.subscribers.iter().filter_map(Weak::upgrade) {
            let mut q = queue.events.lock().unwrap();
            if q.len() >= self.capacity {
                if let Some(pos) = q.iter().position(|e| e.kind.droppable()) {
                    q.remove(pos);
                }
            }
            q.push_back(event.clone());
            drop(q);
            queue.notify.notify_one();
        }
        event.seq
    }

    pub fn subscriber_count(&self) -> usize {
        self.inner.lock().unwrap().subscribers.iter().filter(|w| w.strong_count() > 0).count()
    }
}

pub struct Subscriber {
    queue: Arc<Queue>,
}

impl Subscriber {
    pub fn try_recv(&self) -> Option<Event> {
        self.queue.events.lock().unwrap().pop_front()
    }

    pub async fn recv(&self) -> Event {
        loop {
            if let Some(e) = self.try_recv() {
                return e;
            }
            self.queue.notify.notified().await;
        }
    }

    pub fn pending(&self) -> usize {
        self.queue.events.lock().unwrap().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sequence_numbers_are_monotonic() {
        let hub = EventHub::default();
        let sub = hub.subscribe();
        for i in 0..5 {
            hub.publish(EventKind::State, json!({ "i": i }));
        }
        let seqs: Vec<u64> = std::iter::from_fn(|| sub.try_recv()).map(|e| e.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn full_queue_drops_oldest_state_frames_only() {
        let hub = EventHub::with_capacity(3);
        let sub = hub.subscribe();
        hub.publish(EventKind::RunCompleted, json!({}));
        hub.publish(EventKind::State, json!({}));
        hub.publish(EventKind::State, json!({}));
        hub.publish(EventKind::State, json!({}));
        hub.publish(EventKind::RunFailed, json!({}));
        let got: Vec<(u64, EventKind)> = std::iter::from_fn(|| sub.try_recv()).map(|e| (e.seq, e.kind)).collect();
        assert_eq!(got, vec![(1, EventKind::RunCompleted), (4, EventKind::State), (5, EventKind::RunFailed)]);
    }

    #[test]
    fn terminal_events_are_kept_past_capacity() {
        let hub = EventHub::with_capacity(1);
        let sub = hub.subscribe();
        hub.publish(EventKind::RunCompleted, json!({}));
        hub.publish(EventKind::RunFailed, json!({}));
        assert_eq!(sub.pending(), 2);
    }

    #[test]
    fn dropped_subscribers_are_pruned() {
        let hub = EventHub::default();
        let a = hub.subscribe();
        let _b = hub.subscribe();
        drop(a);
        hub.publish(EventKind::State, json!({}));
        assert_eq!(hub.subscriber_count(), 1);
    }

    #[test]
    fn envelope_shape() {
        let hub = EventHub::default();
        let sub = hub.subscribe();
        hub.publish(EventKind::Progress, json!({ "stage": "pro" }));
        let v = serde_json::to_value(sub.try_recv().unwrap()).unwrap();
        assert_eq!(v["type"], "progress");
        assert_eq!(v["seq"], 1);
        assert!(v["ts"].as_u64().unwrap() > 0);
        assert_eq!(v["payload"]["stage"], "pro");
    }
}
