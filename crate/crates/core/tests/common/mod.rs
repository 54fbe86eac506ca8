//! Checkers shared by the link, pipeline and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wearlink::link::{LinkConfig, LinkError, LinkSim};
use wearlink::sensor::AccelSample;

use wearlink::codec::WatchMode;
use wearlink::link::{EventDetail, LinkEvent, LinkEventKind, ACQUIRING_MESSAGE, AP_STARTED_MESSAGE};

/// Verifies protocol ordering, ACC gating, the once-only acquisition notice
/// and half-duplex exclusivity over a recorded event sequence.
pub fn check_link_invariants(events: &[LinkEvent]) -> Result<(), String> {
    let mut started = false;
    let mut mode = WatchMode::Idle;
    let mut acc_seen = false;
    let mut deliveries = 0usize;
    let mut announced = 0usize;
    let mut sent: HashMap<u64, (u64, (u16, u16, u16))> = HashMap::new();
    let mut prev_t = 0;

    for (i, ev) in events.iter().enumerate() {
        if ev.t < prev_t {
            return Err(format!("event {i} goes back in time"));
        }
        prev_t = ev.t;
        // ties are ordered by emission, so "in the air" means sent earlier
        // in the sequence and not yet delivered or lost
        if ev.kind.is_ap_transmission() && !sent.is_empty() {
            return Err(format!("event {i}: AP transmitted at t={} with {} frame(s) in the air", ev.t, sent.len()));
        }
        match (ev.kind, &ev.detail) {
            (LinkEventKind::ApStarted, EventDetail::Message(m)) => {
                if started || *m != AP_STARTED_MESSAGE {
                    return Err(format!("event {i}: bad start"));
                }
                started = true;
            }
            (LinkEventKind::ModeSet, EventDetail::Mode(m)) => {
                if !started {
                    return Err(format!("event {i}: mode set before start"));
                }
                mode = *m;
                acc_seen |= mode == WatchMode::Acc;
            }
            (LinkEventKind::FrameSent, EventDetail::Frame { id, frame, .. }) => {
                if !started || mode != WatchMode::Acc || frame.mode() != WatchMode::Acc {
                    return Err(format!("event {i}: frame sent outside ACC mode"));
                }
                sent.insert(*id, (ev.t, frame.payload()));
            }
            (LinkEventKind::FrameDelivered, EventDetail::Frame { id, frame, .. })
            | (LinkEventKind::FrameLost, EventDetail::Frame { id, frame, .. }) => {
                if !(started && acc_seen) {
                    return Err(format!("event {i}: delivery before start/ACC"));
                }
                let (t0, payload) = sent
                    .remove(id)
                    .ok_or_else(|| format!("event {i}: frame {id} never sent"))?;
                if ev.t < t0 {
                    return Err(format!("event {i}: frame {id} landed before it was sent"));
                }
                if ev.kind == LinkEventKind::FrameDelivered {
                    deliveries += 1;
                    if frame.payload() != payload {
                        return Err(format!("event {i}: payload changed in flight"));
                    }
                }
            }
            (LinkEventKind::AcquireAnnounced, EventDetail::Message(m)) => {
                if *m != ACQUIRING_MESSAGE || deliveries == 0 {
                    return Err(format!("event {i}: acquisition announced before any delivery"));
                }
                announced += 1;
            }
            (kind, detail) => return Err(format!("event {i}: {kind:?} with {detail:?}")),
        }
    }

    if announced != usize::from(deliveries > 0) {
        return Err(format!("acquisition announced {announced} times for {deliveries} deliveries"));
    }
    Ok(())
}

/// Verifies that every appliance transition in a server log follows a PIR
/// trigger and an ACTION line requesting it.
pub fn check_gate(log: &[String]) -> Result<(), String> {
    let mut armed = false;
    let mut last_action: Option<&str> = None;
    for (i, line) in log.iter().enumerate() {
        if line.ends_with("PIR TRIGGERED") {
            armed = true;
        } else if let Some(pos) = line.find("] ACTION ") {
            last_action = Some(&line[pos + 9..]);
        } else if let Some(pos) = line.find("] APPLIANCE ") {
            if !armed {
                return Err(format!("line {i}: transition before any PIR trigger"));
            }
            let target = line.rsplit(' ').next().unwrap();
            if last_action != Some(target) {
                return Err(format!("line {i}: transition to {target} without matching action ({})", &line[pos..]));
            }
            last_action = None;
        }
    }
    Ok(())
}

/// Drives a simulation with a random operation sequence, checking each
/// result against a reference model of the protocol state.
pub fn random_session(seed: u64, ops: usize) -> LinkSim {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = LinkConfig {
        loss_probability: [0.0, 0.3, 1.0][rng.gen_range(0..3)],
        latency: rng.gen_range(0..40),
        seed,
        ..LinkConfig::default()
    };
    let mut sim = LinkSim::new(cfg).unwrap();
    let mut started = false;
    let mut mode = WatchMode::Idle;

    for _ in 0..ops {
        match rng.gen_range(0..10) {
            0 => {
                let r = sim.ap_start();
                assert_eq!(r.is_ok(), !started);
                started = true;
            }
            1 => {
                let m = WatchMode::ALL[rng.gen_range(0..4)];
                match sim.watch_set_mode(m) {
                    Ok(_) => mode = m,
                    Err(e) => assert!(!started && e == LinkError::NotStarted),
                }
            }
            2..=6 => {
                let s = AccelSample::new(sim.now(), rng.gen_range(0..1024), rng.gen_range(0..1024), rng.gen_range(0..1024)).unwrap();
                match sim.transmit_sample(&s) {
                    Ok(ev) => {
                        assert!(started && mode == WatchMode::Acc);
                        assert_eq!(ev.kind, LinkEventKind::FrameSent);
                    }
                    Err(LinkError::NotStarted) => assert!(!started),
                    Err(LinkError::NotStreaming(m)) => assert!(started && m == mode && m != WatchMode::Acc),
                    Err(e) => panic!("{e}"),
                }
            }
            7 | 8 => {
                let t = sim.now() + rng.gen_range(0..30);
                sim.run_until(t).unwrap();
            }
            _ => {
                sim.flush().unwrap();
                assert_eq!(sim.in_flight(), 0);
            }
        }
        while sim.recv().is_some() {}
    }
    sim.flush().unwrap();
    sim
}

