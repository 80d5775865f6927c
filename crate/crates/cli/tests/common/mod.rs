//! Shared helpers: running the binary and a synthetic corpus with known
//! filler plausibilities.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tfk() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tfk"));
    cmd.env_remove("TFK_DATA_DIR").env("RUST_LOG", "error");
    cmd
}

/// Runs `tfk` with `args` in `dir`, panicking with stderr on failure.
pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = tfk().current_dir(dir).args(args).output().expect("spawn tfk");
    assert!(
        out.status.success(),
        "tfk {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

pub fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub const ROLES: [&str; 4] = ["agent", "patient", "instrument", "location"];
const LOCATION_PREPS: [&str; 3] = ["on", "at", "in"];

/// Parameters of the generative model.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub eval_verbs: usize,
    pub background_verbs: usize,
    pub nouns_per_class: usize,
    /// Classes of the subject/object slots.
    pub argument_classes: usize,
    /// Classes of the prepositional slots, independent of the argument class.
    pub adjunct_classes: usize,
    /// Decay of a slot's class preference with circular class distance.
    pub sharpness: f64,
    pub events: usize,
    pub gold_per_slot: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            eval_verbs: 20,
            background_verbs: 60,
            nouns_per_class: 25,
            argument_classes: 8,
            adjunct_classes: 8,
            sharpness: 0.9,
            events: 1_000_000,
            gold_per_slot: 12,
            seed: 7,
        }
    }
}

/// One verb with a class distribution for each role slot.
#[derive(Debug, Clone)]
pub struct SynthVerb {
    pub name: String,
    pub location_prep: &'static str,
    /// Indexed like [`ROLES`]; each sums to 1.
    pub class_probs: [Vec<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct Synth {
    pub spec: SynthSpec,
    pub nouns: Vec<String>,
    pub argument_class: Vec<usize>,
    pub adjunct_class: Vec<usize>,
    pub verbs: Vec<SynthVerb>,
}

fn circular(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

impl Synth {
    pub fn new(spec: SynthSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let n_nouns = spec.nouns_per_class * spec.argument_classes;
        let nouns: Vec<String> = (0..n_nouns).map(|i| format!("noun{i:04}-n")).collect();
        let argument_class: Vec<usize> = (0..n_nouns).map(|i| i % spec.argument_classes).collect();
        // Each argument class spreads evenly over the adjunct classes.
        let adjunct_class: Vec<usize> =
            (0..n_nouns).map(|i| (i / spec.argument_classes) % spec.adjunct_classes).collect();
        let profile = |rng: &mut ChaCha8Rng, n: usize| {
            let center = rng.random_range(0..n);
            let w: Vec<f64> = (0..n).map(|c| (-spec.sharpness * circular(c, center, n) as f64).exp()).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect::<Vec<f64>>()
        };
        let verbs = (0..spec.eval_verbs + spec.background_verbs)
            .map(|i| SynthVerb {
                name: if i < spec.eval_verbs { format!("eval{i:02}-v") } else { format!("bg{i:03}-v") },
                location_prep: LOCATION_PREPS[rng.random_range(0..LOCATION_PREPS.len())],
                class_probs: [
                    profile(&mut rng, spec.argument_classes),
                    profile(&mut rng, spec.argument_classes),
                    profile(&mut rng, spec.adjunct_classes),
                    profile(&mut rng, spec.adjunct_classes),
                ],
            })
            .collect();
        Self { spec, nouns, argument_class, adjunct_class, verbs }
    }

    fn relation(&self, verb: &SynthVerb, role: usize) -> &'static str {
        match role {
            0 => "sbj",
            1 => "obj",
            2 => "with",
            _ => verb.location_prep,
        }
    }

    fn noun_class(&self, noun: usize, role: usize) -> usize {
        if role < 2 {
            self.argument_class[noun]
        } else {
            self.adjunct_class[noun]
        }
    }

    /// The generating probability `P(noun | verb, role)`.
    pub fn plausibility(&self, verb: &SynthVerb, role: usize, noun: usize) -> f64 {
        let class = self.noun_class(noun, role);
        let members = (0..self.nouns.len()).filter(|&n| self.noun_class(n, role) == class).count();
        verb.class_probs[role][class] / members as f64
    }

    fn members(&self, role: usize) -> Vec<Vec<usize>> {
        let classes = if role < 2 { self.spec.argument_classes } else { self.spec.adjunct_classes };
        let mut out = vec![Vec::new(); classes];
        for n in 0..self.nouns.len() {
            out[self.noun_class(n, role)].push(n);
        }
        out
    }

    /// Samples `spec.events` single events and returns them aggregated.
    pub fn sample_counts(&self) -> BTreeMap<(usize, usize, usize), u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x5eed);
        let members = [self.members(0), self.members(1), self.members(2), self.members(3)];
        let slots = self.verbs.len() * ROLES.len();
        let mut counts = BTreeMap::new();
        for i in 0..self.spec.events {
            let slot = i % slots;
            let (v, role) = (slot / ROLES.len(), slot % ROLES.len());
            let probs = &self.verbs[v].class_probs[role];
            let mut u: f64 = rng.random();
            let mut class = probs.len() - 1;
            for (c, p) in probs.iter().enumerate() {
                if u < *p {
                    class = c;
                    break;
                }
                u -= p;
            }
            let pool = &members[role][class];
            let noun = pool[rng.random_range(0..pool.len())];
            *counts.entry((v, role, noun)).or_insert(0) += 1;
        }
        counts
    }

    /// `verb<TAB>relation<TAB>noun<TAB>count` lines.
    pub fn triples_tsv(&self, counts: &BTreeMap<(usize, usize, usize), u64>) -> String {
        let mut s = String::new();
        for (&(v, role, noun), &n) in counts {
            let verb = &self.verbs[v];
            let _ = writeln!(s, "{}\t{}\t{}\t{n}", verb.name, self.relation(verb, role), self.nouns[noun]);
        }
        s
    }

    /// One line per event, without a count column.
    pub fn event_lines(&self, counts: &BTreeMap<(usize, usize, usize), u64>) -> String {
        let mut s = String::new();
        for (&(v, role, noun), &n) in counts {
            let verb = &self.verbs[v];
            for _ in 0..n {
                let _ = writeln!(s, "{}\t{}\t{}", verb.name, self.relation(verb, role), self.nouns[noun]);
            }
        }
        s
    }

    /// Gold items for one role: for each evaluated verb, `gold_per_slot`
    /// nouns spread over the classes, rated by their generating probability.
    pub fn gold_tsv(&self, role: usize) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed.wrapping_add(role as u64 + 1));
        let members = self.members(role);
        let mut s = String::new();
        for verb in &self.verbs[..self.spec.eval_verbs] {
            let mut picked = Vec::new();
            let mut c = rng.random_range(0..members.len());
            while picked.len() < self.spec.gold_per_slot {
                let pool = &members[c % members.len()];
                let noun = pool[rng.random_range(0..pool.len())];
                if !picked.contains(&noun) {
                    picked.push(noun);
                }
                c += 1;
            }
            for noun in picked {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}",
                    verb.name,
                    ROLES[role],
                    self.nouns[noun],
                    self.plausibility(verb, role, noun)
                );
            }
        }
        s
    }
}
