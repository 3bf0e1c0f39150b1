//! The shipped fixtures and the verdicts each is expected to produce.

use std::path::PathBuf;

/// Expected outcome of one command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Ok,
    Violation,
}

/// Expected outcome of `check-proof`, with a fragment of the first failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProofExpect {
    pub verdict: Expect,
    /// The failing obligation: 1 proof, 2 pinning, 3 token swap.
    pub obligation: Option<u8>,
    /// Text the failure detail must contain.
    pub failure_contains: Option<&'static str>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    /// Bound for `check-lin` and its expected verdict.
    pub lin_bound: usize,
    pub lin: Expect,
    /// `None` when the fixture ships no outline.
    pub proof: Option<ProofExpect>,
}

const PROOF_OK: Option<ProofExpect> = Some(ProofExpect { verdict: Expect::Ok, obligation: None, failure_contains: None });

const fn proof_fails(at: &'static str) -> Option<ProofExpect> {
    Some(ProofExpect { verdict: Expect::Violation, obligation: Some(1), failure_contains: Some(at) })
}

const MANIFEST: &[Fixture] = &[
    Fixture { name: "atomic-inc", lin_bound: 8, lin: Expect::Ok, proof: PROOF_OK },
    // The combiner performs increments whose preselected return value will
    // not match; no token can linearize them, so the outline fails at `lp`.
    Fixture { name: "flat-combiner", lin_bound: 12, lin: Expect::Ok, proof: proof_fails("label lp") },
    Fixture { name: "flat-combiner-matched", lin_bound: 12, lin: Expect::Ok, proof: PROOF_OK },
    Fixture { name: "flat-combiner-no-helping", lin_bound: 12, lin: Expect::Ok, proof: proof_fails("label lp") },
    Fixture { name: "flat-combiner-nolock", lin_bound: 12, lin: Expect::Violation, proof: None },
    Fixture { name: "flat-combiner-stale-write", lin_bound: 12, lin: Expect::Violation, proof: None },
    Fixture { name: "dcsl-cell", lin_bound: 8, lin: Expect::Ok, proof: PROOF_OK },
    Fixture { name: "dcsl-helping", lin_bound: 8, lin: Expect::Ok, proof: proof_fails("rule Conseq") },
];

/// Every shipped fixture with its expected verdicts.
pub fn fixture_manifest() -> &'static [Fixture] {
    MANIFEST
}

/// The directory holding `<name>/model.json`, `outline.json` and
/// `expected.json` for every fixture.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

impl Fixture {
    pub fn model_path(&self) -> PathBuf {
        fixtures_dir().join(self.name).join("model.json")
    }

    pub fn outline_path(&self) -> Option<PathBuf> {
        self.proof.map(|_| fixtures_dir().join(self.name).join("outline.json"))
    }

    pub fn expected_path(&self) -> PathBuf {
        fixtures_dir().join(self.name).join("expected.json")
    }
}
