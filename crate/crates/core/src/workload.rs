//! Deterministic synthetic trace generation: semi-Markov legitimate
//! workloads plus injected attack bursts.
//!
//! Legitimate sessions walk a transition matrix over short action templates,
//! separated by uniform think times, with per-call inter-arrival jitter.
//! Attacks come in two designed flavors:
//!
//! - `frequency-shift` splices a burst with a distinct syscall mix into the
//!   trace, visibly changing per-window count distributions;
//! - `order-shuffle` permutes whole windows of an existing segment, leaving
//!   the multiset of per-window count vectors over the span untouched.
//!   Per-window frequency models cannot see it by construction; only
//!   sequence-aware models can.
//!
//! All generation is driven by ChaCha8 seeded from the profile, one stream
//! per session, so equal inputs give byte-identical traces.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{LabelSpan, SyscallEvent};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("span out of range: {0}")]
    SpanOutOfRange(String),
    #[error("profile parse error: {0}")]
    Parse(String),
}

/// A short fixed syscall sequence with per-call inter-arrival jitter bounds
/// (nanoseconds, inclusive). Jitter must be at least 1 ns so timestamps stay
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub name: String,
    pub calls: Vec<String>,
    pub jitter_ns: (u64, u64),
}

/// Semi-Markov legitimate workload: actions, a row-stochastic transition
/// matrix, and uniform think-time bounds between actions (default 1-5 s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub syscalls: Vec<String>,
    pub actions: Vec<ActionTemplate>,
    /// `transitions[i][j]` is the probability of action `j` after `i`.
    pub transitions: Vec<Vec<f64>>,
    pub think_time_ns: (u64, u64),
    pub seed: u64,
}

impl WorkloadProfile {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.actions.is_empty() {
            return Err(WorkloadError::InvalidProfile("no actions".into()));
        }
        if self.transitions.len() != self.actions.len() {
            return Err(WorkloadError::InvalidProfile(format!(
                "transition matrix has {} rows for {} actions",
                self.transitions.len(),
                self.actions.len()
            )));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            if row.len() != self.actions.len() {
                return Err(WorkloadError::InvalidProfile(format!(
                    "transition row {i} has {} columns",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(WorkloadError::InvalidProfile(format!(
                    "transition row {i} has probabilities outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(WorkloadError::InvalidProfile(format!(
                    "transition row {i} sums to {sum}, not 1"
                )));
            }
        }
        let (lo, hi) = self.think_time_ns;
        if lo == 0 || lo > hi {
            return Err(WorkloadError::InvalidProfile(
                "think-time bounds must satisfy 0 < low <= high".into(),
            ));
        }
        for action in &self.actions {
            if action.calls.is_empty() {
                return Err(WorkloadError::InvalidProfile(format!(
                    "action {} has no calls",
                    action.name
                )));
            }
            let (lo, hi) = action.jitter_ns;
            if lo == 0 || lo > hi {
                return Err(WorkloadError::InvalidProfile(format!(
                    "action {}: jitter bounds must satisfy 0 < low <= high",
                    action.name
                )));
            }
            for call in &action.calls {
                if !self.syscalls.contains(call) {
                    return Err(WorkloadError::InvalidProfile(format!(
                        "action {} uses syscall {call} missing from the alphabet",
                        action.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses a profile from its TOML form.
    pub fn from_toml_str(text: &str) -> Result<Self, WorkloadError> {
        let profile: WorkloadProfile =
            toml::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("profile serializes")
    }

    /// Built-in profiles: `default` (mixed 30-call web-ish workload) and
    /// `cyclic` (strongly periodic pattern that rewards sequence models).
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "default" => Some(default_profile()),
            "cyclic" => Some(cyclic_profile()),
            _ => None,
        }
    }
}

const DEFAULT_ALPHABET: [&str; 30] = [
    "accept",
    "access",
    "bind",
    "brk",
    "clone",
    "close",
    "connect",
    "dup",
    "epoll_wait",
    "execve",
    "fcntl",
    "fstat",
    "futex",
    "getpid",
    "ioctl",
    "listen",
    "lseek",
    "mmap",
    "mprotect",
    "munmap",
    "nanosleep",
    "open",
    "poll",
    "read",
    "recvfrom",
    "select",
    "sendto",
    "socket",
    "stat",
    "write",
];

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn default_profile() -> WorkloadProfile {
    let actions = vec![
        ActionTemplate {
            name: "serve_page".into(),
            calls: names(&[
                "accept", "recvfrom", "stat", "open", "read", "read", "mmap", "write", "sendto",
                "close",
            ]),
            jitter_ns: (200_000, 2_000_000),
        },
        ActionTemplate {
            name: "query_db".into(),
            calls: names(&[
                "socket", "connect", "sendto", "poll", "recvfrom", "recvfrom", "futex", "close",
            ]),
            jitter_ns: (300_000, 3_000_000),
        },
        ActionTemplate {
            name: "template_render".into(),
            calls: names(&[
                "open", "fstat", "read", "read", "read", "brk", "mmap", "munmap", "write", "close",
            ]),
            jitter_ns: (100_000, 1_500_000),
        },
        ActionTemplate {
            name: "session_upkeep".into(),
            calls: names(&["futex", "futex", "getpid", "poll", "nanosleep"]),
            jitter_ns: (500_000, 5_000_000),
        },
        ActionTemplate {
            name: "static_asset".into(),
            calls: names(&["access", "open", "fstat", "read", "sendto", "close"]),
            jitter_ns: (150_000, 1_000_000),
        },
        ActionTemplate {
            name: "upload".into(),
            calls: names(&[
                "recvfrom", "recvfrom", "recvfrom", "open", "write", "write", "fcntl", "close",
            ]),
            jitter_ns: (400_000, 4_000_000),
        },
    ];
    let transitions = vec![
        vec![0.15, 0.30, 0.25, 0.10, 0.15, 0.05],
        vec![0.35, 0.10, 0.30, 0.10, 0.10, 0.05],
        vec![0.30, 0.15, 0.10, 0.15, 0.25, 0.05],
        vec![0.25, 0.20, 0.15, 0.05, 0.25, 0.10],
        vec![0.30, 0.20, 0.20, 0.10, 0.10, 0.10],
        vec![0.25, 0.25, 0.20, 0.10, 0.15, 0.05],
    ];
    WorkloadProfile {
        syscalls: names(&DEFAULT_ALPHABET),
        actions,
        transitions,
        think_time_ns: (1_000_000_000, 5_000_000_000),
        seed: 0,
    }
}

fn cyclic_profile() -> WorkloadProfile {
    // a near-deterministic 4-phase cycle with distinct window signatures
    let actions = vec![
        ActionTemplate {
            name: "read_phase".into(),
            calls: vec!["read".into(); 60]
                .into_iter()
                .chain(vec!["fstat".into(); 12])
                .collect(),
            jitter_ns: (20_000_000, 40_000_000),
        },
        ActionTemplate {
            name: "write_phase".into(),
            calls: vec!["write".into(); 50]
                .into_iter()
                .chain(vec!["lseek".into(); 15])
                .collect(),
            jitter_ns: (25_000_000, 45_000_000),
        },
        ActionTemplate {
            name: "network_phase".into(),
            calls: vec!["sendto".into(); 40]
                .into_iter()
                .chain(vec!["recvfrom".into(); 30])
                .collect(),
            jitter_ns: (20_000_000, 45_000_000),
        },
        ActionTemplate {
            name: "sync_phase".into(),
            calls: vec!["futex".into(); 45]
                .into_iter()
                .chain(vec!["poll".into(); 20])
                .collect(),
            jitter_ns: (25_000_000, 40_000_000),
        },
    ];
    let transitions = vec![
        vec![0.02, 0.94, 0.02, 0.02],
        vec![0.02, 0.02, 0.94, 0.02],
        vec![0.02, 0.02, 0.02, 0.94],
        vec![0.94, 0.02, 0.02, 0.02],
    ];
    WorkloadProfile {
        syscalls: names(&[
            "read", "write", "fstat", "lseek", "sendto", "recvfrom", "futex", "poll",
        ]),
        actions,
        transitions,
        think_time_ns: (900_000_000, 1_400_000_000),
        seed: 0,
    }
}

/// Attack generation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackMode {
    /// Splice in a burst drawn from a distinct syscall mix.
    FrequencyShift,
    /// Permute whole windows of an existing segment: marginal-matched,
    /// sequence-broken.
    OrderShuffle,
}

/// Attack-script profile. `kind` is the ground-truth label written to the
/// span (script names like `enum_network`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackProfile {
    pub kind: String,
    pub mode: AttackMode,
    /// Weighted syscall mix of a frequency-shift burst.
    pub burst_mix: Vec<(String, f64)>,
    /// Inter-arrival bounds of burst events (ns, inclusive).
    pub burst_gap_ns: (u64, u64),
    /// Attack duration bounds (ns, inclusive).
    pub duration_ns: (u64, u64),
    /// Window length the order shuffle aligns to and permutes.
    pub window_ns: u64,
}

impl AttackProfile {
    /// Burst heavy on `fcntl`/`close` over a 1 s window grid; the mix that
    /// post-exploitation scripts tend to produce.
    pub fn frequency_shift(kind: impl Into<String>, duration_ns: (u64, u64)) -> Self {
        Self {
            kind: kind.into(),
            mode: AttackMode::FrequencyShift,
            burst_mix: vec![
                ("fcntl".into(), 0.35),
                ("close".into(), 0.25),
                ("open".into(), 0.15),
                ("read".into(), 0.15),
                ("stat".into(), 0.10),
            ],
            burst_gap_ns: (4_000_000, 12_000_000),
            duration_ns,
            window_ns: 1_000_000_000,
        }
    }

    pub fn order_shuffle(kind: impl Into<String>, duration_ns: (u64, u64)) -> Self {
        Self {
            kind: kind.into(),
            mode: AttackMode::OrderShuffle,
            burst_mix: Vec::new(),
            burst_gap_ns: (1, 1),
            duration_ns,
            window_ns: 1_000_000_000,
        }
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        if self.window_ns == 0 {
            return Err(WorkloadError::InvalidProfile(
                "window_ns must be positive".into(),
            ));
        }
        let (lo, hi) = self.duration_ns;
        if lo == 0 || lo > hi {
            return Err(WorkloadError::InvalidProfile(
                "duration bounds must satisfy 0 < low <= high".into(),
            ));
        }
        if self.mode == AttackMode::FrequencyShift {
            if self.burst_mix.is_empty() {
                return Err(WorkloadError::InvalidProfile(
                    "frequency-shift needs a burst mix".into(),
                ));
            }
            let (lo, hi) = self.burst_gap_ns;
            if lo == 0 || lo > hi {
                return Err(WorkloadError::InvalidProfile(
                    "burst gap bounds must satisfy 0 < low <= high".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Generates one legitimate session: a semi-Markov walk over the profile's
/// actions starting at action 0, truncated to `[0, duration_ns)`.
/// Deterministic in (profile, seed, session_id); each session uses its own
/// ChaCha8 stream so sessions are independent and order-free.
pub fn generate_legit(
    profile: &WorkloadProfile,
    duration_ns: u64,
    session_id: u32,
) -> Result<Vec<SyscallEvent>, WorkloadError> {
    profile.validate()?;
    if duration_ns == 0 {
        return Err(WorkloadError::InvalidProfile(
            "duration must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    rng.set_stream(u64::from(session_id).wrapping_add(1));

    let samplers: Vec<WeightedIndex<f64>> = profile
        .transitions
        .iter()
        .map(|row| WeightedIndex::new(row).expect("validated row"))
        .collect();

    let mut events = Vec::new();
    let mut t: u64 = 0;
    let mut action_idx = 0usize;
    'sessions: loop {
        t = t.saturating_add(rng.gen_range(profile.think_time_ns.0..=profile.think_time_ns.1));
        if t >= duration_ns {
            break;
        }
        let action = &profile.actions[action_idx];
        for call in &action.calls {
            t = t.saturating_add(rng.gen_range(action.jitter_ns.0..=action.jitter_ns.1));
            if t >= duration_ns {
                break 'sessions;
            }
            events.push(SyscallEvent::new(session_id, t, call.clone()));
        }
        action_idx = samplers[action_idx].sample(&mut rng);
    }
    Ok(events)
}

/// Injects one attack into the given session of an event list, returning
/// the modified events (sorted) and the exact ground-truth span.
///
/// The span starts at `at_ns` (order-shuffle aligns it down to the window
/// grid) and lasts a duration drawn from the profile bounds. `at_ns` must
/// lie within the session's observed span.
pub fn inject_attack(
    events: &[SyscallEvent],
    attack: &AttackProfile,
    session_id: u32,
    at_ns: u64,
    seed: u64,
) -> Result<(Vec<SyscallEvent>, LabelSpan), WorkloadError> {
    attack.validate()?;
    let last_ts = events
        .iter()
        .filter(|e| e.session_id == session_id)
        .map(|e| e.timestamp_ns)
        .max()
        .ok_or_else(|| {
            WorkloadError::SpanOutOfRange(format!("session {session_id} has no events"))
        })?;
    if at_ns > last_ts {
        return Err(WorkloadError::SpanOutOfRange(format!(
            "attack start {at_ns} is past the session's last event at {last_ts}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = rng.gen_range(attack.duration_ns.0..=attack.duration_ns.1);

    match attack.mode {
        AttackMode::FrequencyShift => {
            let span = LabelSpan {
                session_id,
                start_ns: at_ns,
                end_ns: at_ns + duration,
                kind: attack.kind.clone(),
            };
            let mix = WeightedIndex::new(attack.burst_mix.iter().map(|(_, w)| *w))
                .map_err(|e| WorkloadError::InvalidProfile(format!("burst mix: {e}")))?;
            let mut out: Vec<SyscallEvent> = events.to_vec();
            let mut t = at_ns;
            loop {
                t = t.saturating_add(rng.gen_range(attack.burst_gap_ns.0..=attack.burst_gap_ns.1));
                if t >= span.end_ns {
                    break;
                }
                let call = &attack.burst_mix[mix.sample(&mut rng)].0;
                out.push(SyscallEvent::new(session_id, t, call.clone()));
            }
            sort_trace(&mut out);
            Ok((out, span))
        }
        AttackMode::OrderShuffle => {
            let window = attack.window_ns;
            let start = (at_ns / window) * window;
            let end = start + duration.div_ceil(window).max(2) * window;
            let num_windows = ((end - start) / window) as usize;

            let mut perm: Vec<usize> = (0..num_windows).collect();
            use rand::seq::SliceRandom;
            perm.shuffle(&mut rng);
            if perm.iter().enumerate().all(|(i, &p)| i == p) {
                perm.rotate_left(1);
            }

            let mut out: Vec<SyscallEvent> = events
                .iter()
                .map(|e| {
                    if e.session_id != session_id || e.timestamp_ns < start || e.timestamp_ns >= end
                    {
                        return e.clone();
                    }
                    let w = ((e.timestamp_ns - start) / window) as usize;
                    let offset = e.timestamp_ns - (start + w as u64 * window);
                    let moved = start + perm[w] as u64 * window + offset;
                    SyscallEvent::new(session_id, moved, e.syscall.clone())
                })
                .collect();
            sort_trace(&mut out);
            Ok((
                out,
                LabelSpan {
                    session_id,
                    start_ns: start,
                    end_ns: end,
                    kind: attack.kind.clone(),
                },
            ))
        }
    }
}

fn sort_trace(events: &mut [SyscallEvent]) {
    events.sort_by(|a, b| {
        a.session_id
            .cmp(&b.session_id)
            .then(a.timestamp_ns.cmp(&b.timestamp_ns))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::windowize;
    use crate::trace::build_vocabulary;
    use std::sync::Arc;

    fn two_action_profile(seed: u64) -> WorkloadProfile {
        WorkloadProfile {
            syscalls: names(&["aaa", "bbb"]),
            actions: vec![
                ActionTemplate {
                    name: "a".into(),
                    calls: names(&["aaa"]),
                    jitter_ns: (1_000, 2_000),
                },
                ActionTemplate {
                    name: "b".into(),
                    calls: names(&["bbb"]),
                    jitter_ns: (1_000, 2_000),
                },
            ],
            transitions: vec![vec![0.4, 0.6], vec![0.7, 0.3]],
            think_time_ns: (100_000_000, 200_000_000),
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed_and_session() {
        let profile = two_action_profile(9);
        let a = generate_legit(&profile, 60_000_000_000, 0).unwrap();
        let b = generate_legit(&profile, 60_000_000_000, 0).unwrap();
        assert_eq!(a, b);
        let other_session = generate_legit(&profile, 60_000_000_000, 1).unwrap();
        assert_ne!(a, other_session);
        let other_seed = generate_legit(&two_action_profile(10), 60_000_000_000, 0).unwrap();
        assert_ne!(a, other_seed);
    }

    #[test]
    fn timestamps_strictly_increase_within_a_session() {
        let profile = two_action_profile(4);
        let events = generate_legit(&profile, 30_000_000_000, 0).unwrap();
        assert!(!events.is_empty());
        for pair in events.windows(2) {
            assert!(pair[1].timestamp_ns > pair[0].timestamp_ns);
        }
        assert!(events.iter().all(|e| e.timestamp_ns < 30_000_000_000));
    }

    #[test]
    fn short_duration_may_produce_no_events() {
        let profile = two_action_profile(4);
        // shorter than the minimum think time
        let events = generate_legit(&profile, 50_000_000, 0).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn action_frequencies_match_the_stationary_distribution() {
        // stationary distribution of the two-action chain:
        // pi_a * 0.6 = pi_b * 0.7  =>  pi = (7/13, 6/13)
        let profile = two_action_profile(21);
        let events = generate_legit(&profile, 600_000_000_000, 0).unwrap();
        let n = events.len() as f64;
        let count_a = events.iter().filter(|e| e.syscall == "aaa").count() as f64;
        let pi_a: f64 = 7.0 / 13.0;
        let sigma = (pi_a * (1.0 - pi_a) / n).sqrt();
        assert!(
            (count_a / n - pi_a).abs() < 3.0 * sigma + 1.0 / n,
            "freq {} vs stationary {pi_a} (n = {n})",
            count_a / n
        );
    }

    #[test]
    fn builtin_profiles_validate() {
        for name in ["default", "cyclic"] {
            let profile = WorkloadProfile::builtin(name).unwrap();
            profile.validate().unwrap();
        }
        assert!(WorkloadProfile::builtin("nope").is_none());
    }

    #[test]
    fn profile_round_trips_through_toml() {
        let profile = two_action_profile(3);
        let text = profile.to_toml_string();
        let back = WorkloadProfile::from_toml_str(&text).unwrap();
        assert_eq!(profile, back);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut profile = two_action_profile(1);
        profile.transitions[0][0] = 0.9; // row no longer sums to 1
        assert!(matches!(
            profile.validate(),
            Err(WorkloadError::InvalidProfile(_))
        ));

        let mut profile = two_action_profile(1);
        profile.actions[0].calls = names(&["zzz"]);
        assert!(matches!(
            profile.validate(),
            Err(WorkloadError::InvalidProfile(_))
        ));
    }

    #[test]
    fn frequency_shift_labels_the_requested_span() {
        let profile = WorkloadProfile::builtin("default").unwrap();
        let events = generate_legit(&profile, 60_000_000_000, 0).unwrap();
        let attack =
            AttackProfile::frequency_shift("enum_network", (10_000_000_000, 10_000_000_000));
        let (with_attack, span) = inject_attack(&events, &attack, 0, 30_000_000_000, 5).unwrap();
        assert_eq!(span.start_ns, 30_000_000_000);
        assert_eq!(span.end_ns, 40_000_000_000);
        assert_eq!(span.kind, "enum_network");
        assert!(with_attack.len() > events.len());
        // injected events stay inside the span
        let injected = with_attack.len() - events.len();
        let in_span = with_attack
            .iter()
            .filter(|e| e.timestamp_ns >= span.start_ns && e.timestamp_ns < span.end_ns)
            .count();
        let original_in_span = events
            .iter()
            .filter(|e| e.timestamp_ns >= span.start_ns && e.timestamp_ns < span.end_ns)
            .count();
        assert_eq!(in_span - original_in_span, injected);
    }

    #[test]
    fn frequency_shift_injection_is_deterministic() {
        let profile = WorkloadProfile::builtin("default").unwrap();
        let events = generate_legit(&profile, 60_000_000_000, 0).unwrap();
        let attack = AttackProfile::frequency_shift("hashdump", (5_000_000_000, 15_000_000_000));
        let a = inject_attack(&events, &attack, 0, 20_000_000_000, 7).unwrap();
        let b = inject_attack(&events, &attack, 0, 20_000_000_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn order_shuffle_preserves_the_window_vector_multiset() {
        let profile = WorkloadProfile::builtin("cyclic").unwrap();
        let events = generate_legit(&profile, 120_000_000_000, 0).unwrap();
        let attack = AttackProfile::order_shuffle("enum_system", (20_000_000_000, 20_000_000_000));
        let (shuffled, span) = inject_attack(&events, &attack, 0, 60_000_000_000, 11).unwrap();
        assert_eq!(span.start_ns % 1_000_000_000, 0);
        assert_eq!((span.end_ns - span.start_ns) % 1_000_000_000, 0);

        let vocab = Arc::new(build_vocabulary(&events));
        let before = windowize(&events, &vocab, 1_000_000_000, &[]);
        let after = windowize(&shuffled, &vocab, 1_000_000_000, &[]);

        let w0 = (span.start_ns / 1_000_000_000) as usize;
        let w1 = (span.end_ns / 1_000_000_000) as usize;
        let mut counts_before: Vec<Vec<u32>> = before.sessions[0].vectors[w0..w1]
            .iter()
            .map(|v| v.counts.clone())
            .collect();
        let mut counts_after: Vec<Vec<u32>> = after.sessions[0].vectors[w0..w1]
            .iter()
            .map(|v| v.counts.clone())
            .collect();
        assert_ne!(counts_before, counts_after, "shuffle was a no-op");
        counts_before.sort();
        counts_after.sort();
        assert_eq!(counts_before, counts_after);

        // outside the span nothing changed
        assert_eq!(
            before.sessions[0].vectors[..w0],
            after.sessions[0].vectors[..w0]
        );
    }

    #[test]
    fn order_shuffle_conserves_total_counts() {
        let profile = WorkloadProfile::builtin("cyclic").unwrap();
        let events = generate_legit(&profile, 90_000_000_000, 2).unwrap();
        let attack =
            AttackProfile::order_shuffle("checkcontainer", (15_000_000_000, 15_000_000_000));
        let (shuffled, _) = inject_attack(&events, &attack, 2, 40_000_000_000, 3).unwrap();
        assert_eq!(events.len(), shuffled.len());
        let mut before: Vec<&str> = events.iter().map(|e| e.syscall.as_str()).collect();
        let mut after: Vec<&str> = shuffled.iter().map(|e| e.syscall.as_str()).collect();
        before.sort_unstable();
        after.sort_unstable();
        assert_eq!(before, after);
    }

    #[test]
    fn injection_outside_the_trace_is_rejected() {
        let profile = two_action_profile(2);
        let events = generate_legit(&profile, 10_000_000_000, 0).unwrap();
        let attack = AttackProfile::frequency_shift("env", (1_000_000_000, 1_000_000_000));
        assert!(matches!(
            inject_attack(&events, &attack, 0, 11_000_000_000, 1),
            Err(WorkloadError::SpanOutOfRange(_))
        ));
        assert!(matches!(
            inject_attack(&events, &attack, 9, 1_000_000_000, 1),
            Err(WorkloadError::SpanOutOfRange(_))
        ));
    }

    #[test]
    fn injection_into_a_quiet_region_adds_events() {
        // one lone event at the start, then silence: injecting into the
        // silence must still conserve counts trace-wide
        let events = vec![
            SyscallEvent::new(0, 0, "read"),
            SyscallEvent::new(0, 50_000_000_000, "read"),
        ];
        let attack = AttackProfile::frequency_shift("env", (2_000_000_000, 2_000_000_000));
        let (out, span) = inject_attack(&events, &attack, 0, 10_000_000_000, 13).unwrap();
        assert!(out.len() > events.len());
        let inside = out
            .iter()
            .filter(|e| e.timestamp_ns >= span.start_ns && e.timestamp_ns < span.end_ns)
            .count();
        assert_eq!(inside, out.len() - events.len());
    }
}
