//! Scenario files shipped with the binary.

pub struct Bundled {
    pub name: &'static str,
    pub summary: &'static str,
    pub json: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "luders_qubit",
        summary: "sharp qubit measured by its Lüders normal scheme, rho = |+><+|",
        json: include_str!("../scenarios/luders_qubit.json"),
    },
    Bundled {
        name: "depolarising_counterexample",
        summary: "trivial pointer with a depolarising objectification: nonzero average heat",
        json: include_str!("../scenarios/depolarising_counterexample.json"),
    },
    Bundled {
        name: "depolarising_pointer",
        summary: "rank-2 pointer effects, depolarising objectification, block-degenerate H_A",
        json: include_str!("../scenarios/depolarising_pointer.json"),
    },
    Bundled {
        name: "identity_coupling",
        summary: "no coupling: zero work and zero heat",
        json: include_str!("../scenarios/identity_coupling.json"),
    },
    Bundled {
        name: "unsharp_qubit",
        summary: "unsharp qubit observable {0.5 +- 0.3 sx} with a Yanase-compatible pointer",
        json: include_str!("../scenarios/unsharp_qubit.json"),
    },
    Bundled {
        name: "yanase_violation",
        summary: "as unsharp_qubit but H_A = sx: quantum heat fluctuations and information loss",
        json: include_str!("../scenarios/yanase_violation.json"),
    },
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}
