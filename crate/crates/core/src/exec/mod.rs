//! Deterministic execution of a model.
//!
//! Instances fire under join semantics: a non-env instance becomes ready
//! the moment every input port holds a payload, and firing consumes all of
//! them. Each input port buffers exactly one payload; a second arrival
//! before the buffered one is consumed is an error. Environments never
//! join-fire: payloads arriving at an env go straight out through its
//! binding, and payloads an env produces are injected one at a time,
//! whenever the receiving port is free.
//!
//! A run starts by firing every constant once (in name order), then works
//! a FIFO ready queue; instances made ready by one firing enter the queue
//! in name order. Every firing is one step against the step budget;
//! exhausting the budget ends the run and is reported, not fatal.
//!
//! The trace records one line per port event,
//! `<step> <instance>.<port> <in|out> <hash>`, where the hash is the first
//! eight hex digits of the payload's SHA-256. With fixture bindings a run
//! is a pure function of the model and the seed, so traces are
//! byte-identical across runs.

pub mod binding;
pub mod eval;

use std::collections::{BTreeMap, VecDeque};
use std::sync::mpsc::{self, Receiver};
use std::time::Duration;

use crate::graph::{Instance, ModelError, Network};
use crate::rand::SplitMix64;
use binding::{make_binding, EnvBinding};
use eval::{
    ctr_xor, decode_frames, dh_public, dh_shared, encode_frames, hmac_sha256, parse_literal,
    short_hash, sign_tag, split_lengths, u64_from_payload, EvalError,
};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("{instance}: no evaluator for kind {kind:?}")]
    NoEvaluator { instance: String, kind: String },
    #[error("{instance}: {message}")]
    BadConfig { instance: String, message: String },
    #[error("{instance}: {source}")]
    BadPayload { instance: String, source: EvalError },
    #[error("second payload for {dst}.{port} arrived from {src} before the first was consumed")]
    SlotOccupied { src: String, dst: String, port: String },
    #[error("{instance}: {source}")]
    Io {
        instance: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct ExecOptions {
    pub seed: u64,
    pub max_steps: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { seed: 0, max_steps: 10_000 }
    }
}

#[derive(Debug, Default)]
pub struct RunOutcome {
    pub steps: u64,
    pub budget_exhausted: bool,
    pub mismatches: Vec<String>,
    pub trace: Vec<String>,
    /// Every payload delivered to an env input, in arrival order, keyed by
    /// `instance.port`.
    pub arrivals: BTreeMap<String, Vec<Vec<u8>>>,
}

impl RunOutcome {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && !self.budget_exhausted
    }
}

/// Largest payload an rng instance will produce in one firing.
const RNG_MAX_BYTES: u64 = 1024 * 1024;
/// How long an idle run waits for socket traffic before giving up.
const IDLE_TIMEOUT: Duration = Duration::from_millis(2000);

fn rng_for_instance(seed: u64, name: &str) -> SplitMix64 {
    let digest = eval::sha256(name.as_bytes());
    let personal = u64::from_be_bytes(digest[..8].try_into().expect("eight bytes"));
    SplitMix64::new(seed.wrapping_add(personal))
}

fn evaluate(
    inst: &Instance,
    inputs: &BTreeMap<String, Vec<u8>>,
    rngs: &mut BTreeMap<String, SplitMix64>,
    seed: u64,
) -> Result<BTreeMap<String, Vec<u8>>, ExecError> {
    let get = |port: &str| -> &[u8] {
        inputs.get(port).map(Vec::as_slice).expect("declared input is present when firing")
    };
    let bad_payload =
        |e: EvalError| ExecError::BadPayload { instance: inst.name.clone(), source: e };
    let mut out = BTreeMap::new();
    match inst.kind.as_str() {
        "enc_ctr" => {
            let cipher = ctr_xor(get("Key"), get("Ctr"), get("Plain")).map_err(bad_payload)?;
            out.insert("Cipher".to_string(), cipher);
        }
        "dec_ctr" => {
            let plain = ctr_xor(get("Key"), get("Ctr"), get("Cipher")).map_err(bad_payload)?;
            out.insert("Plain".to_string(), plain);
        }
        "dhpub" => {
            let public = dh_public(get("g"), get("m"), get("x")).map_err(bad_payload)?;
            out.insert("pub".to_string(), public);
        }
        "dhsec" => {
            let shared = dh_shared(get("m"), get("x"), get("pub")).map_err(bad_payload)?;
            out.insert("ssec".to_string(), shared);
        }
        "rng" => {
            let len = u64_from_payload(get("len"))
                .ok_or_else(|| bad_payload(EvalError("length payload exceeds 8 bytes".into())))?;
            if len > RNG_MAX_BYTES {
                return Err(bad_payload(EvalError(format!(
                    "length {len} exceeds the {RNG_MAX_BYTES} byte cap"
                ))));
            }
            let rng = rngs
                .entry(inst.name.clone())
                .or_insert_with(|| rng_for_instance(seed, &inst.name));
            out.insert("out".to_string(), rng.bytes(len as usize));
        }
        "hmac" => {
            out.insert("Tag".to_string(), hmac_sha256(get("Key"), get("Msg")).to_vec());
        }
        "sign" => {
            out.insert("Sig".to_string(), sign_tag(get("Key"), get("Msg")).to_vec());
        }
        "verify" => {
            let valid = sign_tag(get("Key"), get("Msg")).as_slice() == get("Sig");
            out.insert("Result".to_string(), vec![valid as u8]);
        }
        "transform" => {
            return transform_outputs(inst, inputs);
        }
        kind => {
            return Err(ExecError::NoEvaluator {
                instance: inst.name.clone(),
                kind: kind.to_string(),
            })
        }
    }
    Ok(out)
}

fn transform_outputs(
    inst: &Instance,
    inputs: &BTreeMap<String, Vec<u8>>,
) -> Result<BTreeMap<String, Vec<u8>>, ExecError> {
    let bad_payload =
        |e: EvalError| ExecError::BadPayload { instance: inst.name.clone(), source: e };
    let bad_config = |message: String| ExecError::BadConfig { instance: inst.name.clone(), message };
    let ordered: Vec<&[u8]> = inst
        .inputs
        .iter()
        .map(|p| inputs.get(p).map(Vec::as_slice).expect("declared input is present"))
        .collect();
    let single = || -> Result<&[u8], ExecError> {
        match ordered.as_slice() {
            [one] => Ok(one),
            _ => Err(bad_config(format!(
                "op needs exactly one input, this transform has {}",
                ordered.len()
            ))),
        }
    };
    let op = match inst.config.get("op").map(String::as_str) {
        Some(op) => op,
        None if ordered.len() == 1 => "branch",
        None => return Err(bad_config("transform with several inputs needs an op".into())),
    };
    let parts: Vec<Vec<u8>> = match op {
        "branch" => {
            let data = single()?;
            vec![data.to_vec(); inst.outputs.len()]
        }
        "concat" => vec![ordered.concat()],
        "encode" => vec![encode_frames(&ordered)],
        "split" => {
            let data = single()?;
            let text = inst
                .config
                .get("lengths")
                .ok_or_else(|| bad_config("split needs a lengths entry".into()))?;
            let lengths: Vec<usize> = text
                .split(',')
                .map(|piece| {
                    piece
                        .trim()
                        .parse()
                        .map_err(|_| bad_config(format!("bad split length {:?}", piece.trim())))
                })
                .collect::<Result<_, _>>()?;
            split_lengths(data, &lengths, inst.outputs.len()).map_err(bad_payload)?
        }
        "decode" => {
            let frames = decode_frames(single()?).map_err(bad_payload)?;
            if frames.len() != inst.outputs.len() {
                return Err(bad_payload(EvalError(format!(
                    "decoded {} frames for {} output ports",
                    frames.len(),
                    inst.outputs.len()
                ))));
            }
            frames
        }
        other => return Err(bad_config(format!("unknown transform op {other:?}"))),
    };
    if parts.len() != inst.outputs.len() {
        return Err(bad_config(format!(
            "op {op:?} produced {} payloads for {} output ports",
            parts.len(),
            inst.outputs.len()
        )));
    }
    Ok(inst.outputs.iter().cloned().zip(parts).collect())
}

struct Scheduler<'a> {
    net: &'a Network,
    slots: BTreeMap<String, BTreeMap<String, Option<Vec<u8>>>>,
    bindings: BTreeMap<String, EnvBinding>,
    ready: VecDeque<String>,
    steps: u64,
    max_steps: u64,
    budget_exhausted: bool,
    trace: Vec<String>,
    arrivals: BTreeMap<String, Vec<Vec<u8>>>,
    mismatches: Vec<String>,
    rngs: BTreeMap<String, SplitMix64>,
    seed: u64,
}

impl<'a> Scheduler<'a> {
    /// Deliver one emitted payload. Records the out event, then the in
    /// event if a channel carries the payload anywhere.
    fn emit(
        &mut self,
        src: &str,
        port: &str,
        payload: Vec<u8>,
        newly: &mut Vec<String>,
    ) -> Result<(), ExecError> {
        let net = self.net;
        let hash = short_hash(&payload);
        self.trace.push(format!("{} {src}.{port} out {hash}", self.steps));
        let Some((dst, dst_port)) =
            net.channel_from(src, port).map(|c| (c.dst.clone(), c.dst_port.clone()))
        else {
            return Ok(());
        };
        let dst_inst = net.instance(&dst)?;
        if dst_inst.kind == "env" {
            self.trace.push(format!("{} {dst}.{dst_port} in {hash}", self.steps));
            self.arrivals.entry(format!("{dst}.{dst_port}")).or_default().push(payload.clone());
            let binding = self.bindings.get_mut(&dst).expect("every env has a binding");
            binding.on_arrival(dst_inst, &dst_port, &payload, &mut self.mismatches)?;
            return Ok(());
        }
        let slot = self
            .slots
            .get_mut(&dst)
            .expect("every non-env has slots")
            .get_mut(&dst_port)
            .expect("channel targets a declared input");
        if slot.is_some() {
            return Err(ExecError::SlotOccupied {
                src: src.to_string(),
                dst: dst.clone(),
                port: dst_port.clone(),
            });
        }
        *slot = Some(payload);
        self.trace.push(format!("{} {dst}.{dst_port} in {hash}", self.steps));
        let filled = self.slots.get(&dst).expect("present").values().all(Option::is_some);
        if filled {
            newly.push(dst);
        }
        Ok(())
    }

    /// Fire one ready instance: consume its inputs, evaluate, emit.
    fn fire(&mut self, name: &str) -> Result<(), ExecError> {
        let net = self.net;
        self.steps += 1;
        let inst = net.instance(name)?;
        let mut inputs = BTreeMap::new();
        let slots = self.slots.get_mut(name).expect("ready instances have slots");
        for port in &inst.inputs {
            let payload =
                slots.get_mut(port).expect("declared input").take().expect("ready implies full");
            inputs.insert(port.clone(), payload);
        }
        let mut outputs = evaluate(inst, &inputs, &mut self.rngs, self.seed)?;
        let mut newly = Vec::new();
        for port in &inst.outputs {
            let payload = outputs.remove(port).expect("evaluator covers every output port");
            self.emit(name, port, payload, &mut newly)?;
        }
        newly.sort();
        self.ready.extend(newly);
        Ok(())
    }

    /// Fire every constant once, in name order.
    fn fire_consts(&mut self) -> Result<(), ExecError> {
        let net = self.net;
        let consts: Vec<&Instance> = net.instances().filter(|i| i.kind == "const").collect();
        for inst in consts {
            if self.steps >= self.max_steps {
                self.budget_exhausted = true;
                return Ok(());
            }
            let text = inst.config.get("value").ok_or_else(|| ExecError::BadConfig {
                instance: inst.name.clone(),
                message: "const needs a value entry".into(),
            })?;
            let payload = parse_literal(text).map_err(|e| ExecError::BadPayload {
                instance: inst.name.clone(),
                source: e,
            })?;
            self.steps += 1;
            let mut newly = Vec::new();
            for port in &inst.outputs {
                self.emit(&inst.name, port, payload.clone(), &mut newly)?;
            }
            newly.sort();
            self.ready.extend(newly);
        }
        Ok(())
    }

    /// Try to inject one pending payload per env output whose receiving
    /// slot is free. Returns whether anything moved.
    fn sweep_injections(&mut self) -> Result<bool, ExecError> {
        let net = self.net;
        let mut progress = false;
        let envs: Vec<String> = self.bindings.keys().cloned().collect();
        for env in envs {
            let outputs = net.instance(&env)?.outputs.clone();
            for port in outputs {
                let Some((dst, dst_port)) =
                    net.channel_from(&env, &port).map(|c| (c.dst.clone(), c.dst_port.clone()))
                else {
                    continue;
                };
                let free = match self.slots.get(&dst) {
                    Some(slots) => slots.get(&dst_port).expect("declared input").is_none(),
                    None => true,
                };
                if !free {
                    continue;
                }
                let binding = self.bindings.get_mut(&env).expect("listed env");
                let Some(payload) = binding.pop_injectable(&port) else { continue };
                let mut newly = Vec::new();
                self.emit(&env, &port, payload, &mut newly)?;
                newly.sort();
                self.ready.extend(newly);
                progress = true;
            }
        }
        Ok(progress)
    }

    fn drain_ready(&mut self) -> Result<(), ExecError> {
        while let Some(name) = self.ready.pop_front() {
            if self.steps >= self.max_steps {
                self.budget_exhausted = true;
                return Ok(());
            }
            self.fire(&name)?;
        }
        Ok(())
    }
}

fn stage_received(
    sched: &mut Scheduler<'_>,
    rx: &Receiver<(String, Vec<u8>)>,
    first: (String, Vec<u8>),
) {
    let mut next = Some(first);
    while let Some((env, payload)) = next {
        if let Some(binding) = sched.bindings.get_mut(&env) {
            binding.stage(payload);
        }
        next = rx.try_recv().ok();
    }
}

/// Execute the network to quiescence, budget exhaustion, or socket
/// timeout.
pub fn run(net: &Network, opts: &ExecOptions) -> Result<RunOutcome, ExecError> {
    let (tx, rx) = mpsc::channel();
    let mut bindings = BTreeMap::new();
    let mut has_tcp = false;
    for inst in net.instances().filter(|i| i.kind == "env") {
        let binding = make_binding(inst, &tx)?;
        has_tcp |= matches!(binding, EnvBinding::Tcp { .. });
        bindings.insert(inst.name.clone(), binding);
    }
    drop(tx);

    let slots: BTreeMap<String, BTreeMap<String, Option<Vec<u8>>>> = net
        .instances()
        .filter(|i| i.kind != "env")
        .map(|i| (i.name.clone(), i.inputs.iter().map(|p| (p.clone(), None)).collect()))
        .collect();

    let mut sched = Scheduler {
        net,
        slots,
        bindings,
        ready: VecDeque::new(),
        steps: 0,
        max_steps: opts.max_steps,
        budget_exhausted: false,
        trace: Vec::new(),
        arrivals: BTreeMap::new(),
        mismatches: Vec::new(),
        rngs: BTreeMap::new(),
        seed: opts.seed,
    };

    sched.fire_consts()?;
    loop {
        sched.drain_ready()?;
        if sched.budget_exhausted {
            break;
        }
        if sched.sweep_injections()? {
            continue;
        }
        if !has_tcp {
            break;
        }
        match rx.recv_timeout(IDLE_TIMEOUT) {
            Ok(first) => stage_received(&mut sched, &rx, first),
            Err(_) => break,
        }
    }

    let mut mismatches = sched.mismatches;
    for (name, binding) in sched.bindings.iter_mut() {
        binding.finish(net.instance(name)?, &mut mismatches);
    }
    Ok(RunOutcome {
        steps: sched.steps,
        budget_exhausted: sched.budget_exhausted,
        mismatches,
        trace: sched.trace,
        arrivals: sched.arrivals,
    })
}
