use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::crt::{compute_shares, crt_reconstruct, scale_to_integers, CrtConfig};
use super::decoy::{run_decoy_check_with, Attacker, Basis, DecoyCheck};
use super::ghz::{GhzBackend, GhzRound, GhzSource, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::qsim::StateVector;
use crate::seed::derive_seed;

pub const TAG_GHZ: u64 = 3;
pub const TAG_DECOY: u64 = 4;
pub const TAG_INTERCEPT: u64 = 5;

fn default_decoys() -> usize {
    20
}

fn default_cap() -> u64 {
    DEFAULT_STATE_CAP as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(default)]
    pub crt: CrtConfig,
    /// Decoy particles per client per GHZ round (delta).
    #[serde(default = "default_decoys")]
    pub decoys: usize,
    /// Abort when a measured decoy error rate exceeds this.
    #[serde(default)]
    pub threshold: f64,
    #[serde(default)]
    pub attacker: Attacker,
    #[serde(default)]
    pub backend: GhzBackend,
    #[serde(default = "default_cap")]
    pub state_cap: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            crt: CrtConfig::default(),
            decoys: default_decoys(),
            threshold: 0.0,
            attacker: Attacker::None,
            backend: GhzBackend::Auto,
            state_cap: default_cap(),
        }
    }
}

impl ProtocolConfig {
    pub fn new(crt: CrtConfig) -> Self {
        Self {
            crt,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Participant {
    Server,
    Client(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Server publishes gamma (payload) and the moduli.
    Announce,
    /// Server sends delta + 1 particles (payload) for one GHZ round.
    Distribute,
    /// Client confirms receipt.
    Ack,
    /// Server reveals decoy positions and bases; payload is delta.
    RevealDecoys,
    /// Client reports decoy results; payload is the mismatch count found by comparison.
    DecoyResults,
    /// Server tells the client to measure its GHZ particle.
    Measure,
    /// Client sends s' = (s + o) mod d.
    MaskedShare,
    /// Server cancels the protocol.
    Abort,
}

/// One classical message; `round` numbers the GHZ rounds as component * m + modulus index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: Participant,
    pub to: Participant,
    pub round: usize,
    pub modulus: u64,
    pub kind: MessageKind,
    pub payload: u64,
}

/// What an intercept-resend attacker got from the GHZ particle itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interception {
    pub client: usize,
    pub basis: Basis,
    /// The client's mask, when the attacker happened to measure in the Fourier basis.
    pub learned_mask: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub component: usize,
    pub modulus: u64,
    pub ghz: GhzRound,
    pub decoys: Vec<DecoyCheck>,
    pub masked: Vec<u64>,
    pub residue: Option<u64>,
    pub interception: Option<Interception>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub round: usize,
    pub component: usize,
    pub modulus: u64,
    pub client: usize,
    pub error_rate: f64,
}

/// Full record of a run. It includes the clients' private scaled values and shares so
/// that a run can be audited; none of that is sent to the server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub gamma: f64,
    pub moduli: Vec<u64>,
    pub modulus_product: u128,
    pub signed: bool,
    pub weights: Vec<f64>,
    pub backend: GhzBackend,
    /// mu[k][j]
    pub mu: Vec<Vec<i128>>,
    /// shares[k][j][i] = mu[k][j] mod d_i
    pub shares: Vec<Vec<Vec<u64>>>,
    pub rounds: Vec<RoundRecord>,
    /// residues[j][i] = (sum_k mu[k][j]) mod d_i as computed by the server
    pub residues: Vec<Vec<u64>>,
    pub totals: Vec<i128>,
    pub gradient: Option<Vec<f64>>,
    pub abort: Option<AbortRecord>,
    pub messages: Vec<Message>,
}

impl ProtocolTranscript {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Recomputes every residue, CRT total and gradient entry from the recorded shares
    /// and masks and compares with what the run reported.
    pub fn verify(&self) -> Result<bool> {
        let crt = CrtConfig::new(self.moduli.clone(), self.gamma, self.signed)?;
        let m = self.moduli.len();
        for r in &self.rounds {
            let Some(residue) = r.residue else { continue };
            if aggregate_residue(&r.masked, &r.ghz)? != residue {
                return Ok(false);
            }
            let i = r.round % m;
            let direct = self
                .shares
                .iter()
                .fold(0u64, |acc, s| (acc + s[r.component][i]) % r.modulus);
            if r.interception.is_none() && direct != residue {
                return Ok(false);
            }
            if self.residues.get(r.component).and_then(|v| v.get(i)) != Some(&residue) {
                return Ok(false);
            }
        }
        if self.abort.is_some() {
            return Ok(self.gradient.is_none());
        }
        for (j, res) in self.residues.iter().enumerate() {
            let total = crt_reconstruct(res, &crt)?;
            if self.totals.get(j) != Some(&total) {
                return Ok(false);
            }
            let g = self.gradient.as_ref().and_then(|g| g.get(j));
            if g != Some(&(total as f64 / self.gamma)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// (o_s + sum_k s'_k) mod d.
pub fn aggregate_residue(masked: &[u64], round: &GhzRound) -> Result<u64> {
    if masked.len() != round.clients.len() {
        return Err(Error::DimensionMismatch {
            expected: round.clients.len(),
            got: masked.len(),
        });
    }
    let d = round.d;
    if let Some(&bad) = masked.iter().find(|&&s| s >= d) {
        return Err(Error::ModulusMismatch { round: d, shares: bad });
    }
    Ok(masked.iter().fold(round.server % d, |acc, s| (acc + s) % d))
}

/// beta_k = M_k / sum M.
pub fn weights_from_counts(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts.iter().map(|&m| m as f64 / total as f64).collect()
}

/// Quantum resources of one round as seen by each participant's lab.
struct Link {
    ghz: GhzRound,
    decoys: Vec<DecoyCheck>,
    interception: Option<Interception>,
}

struct Client {
    id: usize,
    /// shares[j][i]
    shares: Vec<Vec<u64>>,
    m: usize,
}

impl Client {
    fn handle(&self, msg: &Message, link: &Link) -> Option<Message> {
        let reply = |kind, payload| Message {
            from: Participant::Client(self.id),
            to: Participant::Server,
            round: msg.round,
            modulus: msg.modulus,
            kind,
            payload,
        };
        match msg.kind {
            MessageKind::Distribute => Some(reply(MessageKind::Ack, 0)),
            MessageKind::RevealDecoys => Some(reply(MessageKind::DecoyResults, link.decoys[self.id].errors as u64)),
            MessageKind::Measure => {
                let (j, i) = (msg.round / self.m, msg.round % self.m);
                let o = link.ghz.clients[self.id];
                Some(reply(MessageKind::MaskedShare, (self.shares[j][i] + o) % msg.modulus))
            }
            MessageKind::Announce | MessageKind::Abort => None,
            MessageKind::Ack | MessageKind::DecoyResults | MessageKind::MaskedShare => None,
        }
    }
}

enum ServerEvent {
    Continue,
    Abort(AbortRecord),
    Residue(u64),
}

struct Server {
    clients: usize,
    acks: usize,
    reports: Vec<Option<u64>>,
    masked: Vec<Option<u64>>,
}

impl Server {
    fn new(clients: usize) -> Self {
        Self {
            clients,
            acks: 0,
            reports: vec![None; clients],
            masked: vec![None; clients],
        }
    }

    fn broadcast(&self, round: usize, modulus: u64, kind: MessageKind, payload: u64) -> Vec<Message> {
        (0..self.clients)
            .map(|k| Message {
                from: Participant::Server,
                to: Participant::Client(k),
                round,
                modulus,
                kind,
                payload,
            })
            .collect()
    }

    fn begin(&mut self, round: usize, modulus: u64, particles: u64) -> Vec<Message> {
        self.acks = 0;
        self.reports.iter_mut().for_each(|r| *r = None);
        self.masked.iter_mut().for_each(|r| *r = None);
        self.broadcast(round, modulus, MessageKind::Distribute, particles)
    }

    fn handle(
        &mut self,
        msg: &Message,
        link: &Link,
        threshold: f64,
        component: usize,
        out: &mut Vec<Message>,
    ) -> ServerEvent {
        let Participant::Client(k) = msg.from else {
            return ServerEvent::Continue;
        };
        match msg.kind {
            MessageKind::Ack => {
                self.acks += 1;
                if self.acks == self.clients {
                    let delta = link.decoys[0].delta as u64;
                    out.extend(self.broadcast(msg.round, msg.modulus, MessageKind::RevealDecoys, delta));
                }
                ServerEvent::Continue
            }
            MessageKind::DecoyResults => {
                self.reports[k] = Some(msg.payload);
                if self.reports.iter().all(Option::is_some) {
                    let failed = self.reports.iter().enumerate().find_map(|(c, errors)| {
                        let delta = link.decoys[c].delta;
                        let rate = if delta == 0 { 0.0 } else { errors.unwrap() as f64 / delta as f64 };
                        (rate > threshold).then_some((c, rate))
                    });
                    if let Some((client, error_rate)) = failed {
                        out.extend(self.broadcast(msg.round, msg.modulus, MessageKind::Abort, 0));
                        return ServerEvent::Abort(AbortRecord {
                            round: msg.round,
                            component,
                            modulus: msg.modulus,
                            client,
                            error_rate,
                        });
                    }
                    out.extend(self.broadcast(msg.round, msg.modulus, MessageKind::Measure, 0));
                }
                ServerEvent::Continue
            }
            MessageKind::MaskedShare => {
                self.masked[k] = Some(msg.payload);
                if self.masked.iter().all(Option::is_some) {
                    let masked: Vec<u64> = self.masked.iter().map(|s| s.unwrap()).collect();
                    let residue = masked
                        .iter()
                        .fold(link.ghz.server % msg.modulus, |acc, s| (acc + s) % msg.modulus);
                    return ServerEvent::Residue(residue);
                }
                ServerEvent::Continue
            }
            _ => ServerEvent::Continue,
        }
    }
}

fn prepare_link(
    source: &GhzSource,
    config: &ProtocolConfig,
    round: usize,
    clients: usize,
    seed: u64,
) -> Link {
    let d = source_modulus(config, round);
    let mut ghz = source.round(&mut StateVector::rng(derive_seed(seed, &[TAG_GHZ, round as u64])));
    let decoys: Vec<DecoyCheck> = (0..clients)
        .map(|k| {
            let mut rng = StateVector::rng(derive_seed(seed, &[TAG_DECOY, round as u64, k as u64]));
            run_decoy_check_with(config.decoys, d, config.attacker.targets(k, round), config.threshold, &mut rng)
        })
        .collect();
    let interception = (0..clients)
        .find(|&k| config.attacker.targets(k, round))
        .map(|client| {
            let mut rng: ChaCha8Rng = StateVector::rng(derive_seed(seed, &[TAG_INTERCEPT, round as u64]));
            if rng.gen_bool(0.5) {
                // Fourier-basis measurement commutes with the honest one
                Interception {
                    client,
                    basis: Basis::Fourier,
                    learned_mask: Some(ghz.clients[client]),
                }
            } else {
                // collapse to |q>^(K+1): every Fourier outcome becomes independent and uniform
                ghz.server = rng.gen_range(0..d);
                ghz.clients.iter_mut().for_each(|o| *o = rng.gen_range(0..d));
                Interception {
                    client,
                    basis: Basis::Computational,
                    learned_mask: None,
                }
            }
        });
    Link {
        ghz,
        decoys,
        interception,
    }
}

fn source_modulus(config: &ProtocolConfig, round: usize) -> u64 {
    config.crt.moduli[round % config.crt.moduli.len()]
}

/// Securely sums beta_k g_k over clients. Each component j and modulus d_i gets its own
/// GHZ round with decoy checking; the server only sees masked shares and its own
/// outcome, and recovers sum_k mu_k^j by CRT.
pub fn run_protocol(
    gradients: &[Vec<f64>],
    weights: &[f64],
    config: &ProtocolConfig,
    seed: u64,
) -> Result<ProtocolTranscript> {
    let crt = &config.crt;
    crt.validate()?;
    let k = gradients.len();
    if k == 0 {
        return Err(Error::InvalidArgument("at least one client is required".into()));
    }
    if weights.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: weights.len(),
        });
    }
    let dim = gradients[0].len();
    if let Some(g) = gradients.iter().find(|g| g.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: g.len(),
        });
    }
    let m = crt.moduli.len();
    let mu: Vec<Vec<i128>> = gradients
        .iter()
        .zip(weights)
        .map(|(g, &b)| scale_to_integers(g, b, crt.gamma))
        .collect::<Result<_>>()?;
    for j in 0..dim {
        let total: i128 = mu.iter().map(|v| v[j]).sum();
        if !crt.fits(total) {
            return Err(Error::AggregateOverflow {
                component: j,
                magnitude: total.unsigned_abs(),
                modulus: crt.modulus(),
            });
        }
    }
    let shares: Vec<Vec<Vec<u64>>> = mu
        .iter()
        .map(|v| v.iter().map(|&x| compute_shares(x, &crt.moduli)).collect())
        .collect();
    let clients: Vec<Client> = shares
        .iter()
        .enumerate()
        .map(|(id, s)| Client {
            id,
            shares: s.clone(),
            m,
        })
        .collect();
    let sources: Vec<GhzSource> = crt
        .moduli
        .iter()
        .map(|&d| GhzSource::new(k, d, config.backend, config.state_cap as u128))
        .collect::<Result<_>>()?;

    let mut transcript = ProtocolTranscript {
        gamma: crt.gamma,
        moduli: crt.moduli.clone(),
        modulus_product: crt.modulus(),
        signed: crt.signed,
        weights: weights.to_vec(),
        backend: sources[0].backend(),
        mu,
        shares,
        rounds: Vec::new(),
        residues: vec![Vec::with_capacity(m); dim],
        totals: Vec::new(),
        gradient: None,
        abort: None,
        messages: Vec::new(),
    };
    let mut server = Server::new(k);
    transcript.messages.extend(server.broadcast(0, 0, MessageKind::Announce, crt.gamma.round() as u64));

    'rounds: for round in 0..dim * m {
        let (j, i) = (round / m, round % m);
        let d = crt.moduli[i];
        let link = prepare_link(&sources[i], config, round, k, seed);
        let mut queue: VecDeque<Message> = server.begin(round, d, config.decoys as u64 + 1).into();
        let mut record = RoundRecord {
            round,
            component: j,
            modulus: d,
            ghz: link.ghz.clone(),
            decoys: link.decoys.clone(),
            masked: Vec::new(),
            residue: None,
            interception: link.interception,
        };
        while let Some(msg) = queue.pop_front() {
            transcript.messages.push(msg);
            match msg.to {
                Participant::Client(c) => queue.extend(clients[c].handle(&msg, &link)),
                Participant::Server => {
                    if msg.kind == MessageKind::MaskedShare {
                        record.masked.push(msg.payload);
                    }
                    let mut out = Vec::new();
                    let event = server.handle(&msg, &link, config.threshold, j, &mut out);
                    queue.extend(out);
                    match event {
                        ServerEvent::Continue => {}
                        ServerEvent::Abort(abort) => {
                            transcript.messages.extend(queue.drain(..));
                            transcript.abort = Some(abort);
                            transcript.rounds.push(record);
                            break 'rounds;
                        }
                        ServerEvent::Residue(r) => {
                            record.residue = Some(r);
                            transcript.residues[j].push(r);
                        }
                    }
                }
            }
        }
        transcript.rounds.push(record);
    }
    if transcript.abort.is_none() {
        transcript.totals = transcript
            .residues
            .iter()
            .map(|res| crt_reconstruct(res, crt))
            .collect::<Result<_>>()?;
        transcript.gradient = Some(transcript.totals.iter().map(|&t| t as f64 / crt.gamma).collect());
    }
    Ok(transcript)
}
