use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{ensure, Result};
use crate::wta::WtaNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LesionKind {
    RemoveNeurons,
    RemoveConnectionsBanRegrowth,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LesionSpec {
    pub kind: LesionKind,
    /// Network neuron ids or synapse ids, by kind.
    pub targets: Vec<usize>,
    pub time_ms: f64,
}

/// Applies a lesion. An empty target set is an error and leaves the
/// network untouched; reapplying a lesion changes nothing.
pub fn apply_lesion(net: &mut WtaNetwork, spec: &LesionSpec) -> Result<()> {
    ensure!(!spec.targets.is_empty(), "lesion has no targets");
    match spec.kind {
        LesionKind::RemoveNeurons => net.remove_neurons(&spec.targets),
        LesionKind::RemoveConnectionsBanRegrowth => net.ban_synapses(&spec.targets),
    }
}

/// Neurons whose mean rate under class B is at least `factor` times that
/// under class A.
pub fn select_encoding_neurons(rate_a: &[f64], rate_b: &[f64], factor: f64, candidates: Range<usize>) -> Vec<usize> {
    candidates.filter(|&k| rate_b[k] > 0.0 && rate_b[k] >= factor * rate_a[k]).collect()
}

/// Currently functional synapses from network neurons in `pre` onto
/// network neurons in `post`, both directions when `both` is set.
pub fn functional_lateral(net: &WtaNetwork, a: Range<usize>, b: Range<usize>, both: bool) -> Vec<usize> {
    let n_in = net.n_inputs();
    (0..net.n_synapses())
        .filter(|&s| {
            if !net.is_active(s) || !net.is_lateral(s) {
                return false;
            }
            let pre = net.pre(s) - n_in;
            let post = net.post(s);
            (a.contains(&pre) && b.contains(&post)) || (both && b.contains(&pre) && a.contains(&post))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorSpec;
    use crate::rng::ChainRng;
    use crate::wta::{Projection, Topology, WtaParams};

    fn net() -> WtaNetwork {
        let topo = Topology {
            n_inputs: 2,
            circuits: vec![2, 2],
            projections: vec![
                Projection { source_start: 0, source_end: 2, target_start: 0, target_end: 4 },
                Projection { source_start: 2, source_end: 6, target_start: 0, target_end: 4 },
            ],
        };
        let mut n = WtaNetwork::new(WtaParams::default(), topo, &PriorSpec::WTA, &mut ChainRng::seed_from_u64(1)).unwrap();
        for s in 0..n.n_synapses() {
            n.set_theta(s, 1.0).unwrap();
        }
        n
    }

    #[test]
    fn lesions_and_selectors() {
        let mut n = net();
        let before = n.clone();
        let empty = LesionSpec { kind: LesionKind::RemoveNeurons, targets: Vec::new(), time_ms: 0.0 };
        assert!(apply_lesion(&mut n, &empty).is_err());
        assert_eq!(n, before);
        let lat = functional_lateral(&n, 0..2, 2..4, true);
        assert_eq!(lat.len(), 8);
        assert_eq!(functional_lateral(&n, 0..2, 2..4, false).len(), 4);
        let l2 = LesionSpec { kind: LesionKind::RemoveConnectionsBanRegrowth, targets: lat, time_ms: 5.0 };
        apply_lesion(&mut n, &l2).unwrap();
        assert!(functional_lateral(&n, 0..2, 2..4, true).is_empty());
        let once = n.clone();
        apply_lesion(&mut n, &l2).unwrap();
        assert_eq!(n, once);
        let sel = select_encoding_neurons(&[1.0, 5.0, 2.0, 0.0], &[3.0, 5.0, 4.0, 0.0], 2.0, 0..4);
        assert_eq!(sel, vec![0, 2]);
    }
}
