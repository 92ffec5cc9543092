//! Property tests over random programs, states and circuits.

use approx::assert_abs_diff_eq;
use num_complex::Complex;
use proptest::prelude::*;
use qca_core::compiler::{
    compile, layers_to_program, program_to_layers, reference_simulate, CircuitIR, Gate,
};
use qca_core::dense::{ColumnAssignment, StateVector};
use qca_core::factored::FactoredState;
use qca_core::gatekit::{build_tau, column_unitary, u_of_p, ProgramColumn};
use qca_core::lattice::{cells_of_step, site_index, Cell};
use qca_core::scalar::{inner, norm};
use qca_core::verify::fidelity_up_to_phase;
use qca_core::{LatticeSpec, Remainders, Topology};

type C = Complex<f64>;

fn state(dim: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-zero", |v| {
            v.iter().any(|&(re, im)| re.abs() + im.abs() > 1e-3)
        })
        .prop_map(|v| {
            let v: Vec<C> = v.into_iter().map(|(re, im)| C::new(re, im)).collect();
            let n = norm(&v);
            v.into_iter().map(|a| a / n).collect()
        })
}

fn column(height: usize) -> impl Strategy<Value = ProgramColumn> {
    prop::collection::vec(any::<bool>(), height).prop_map(ProgramColumn::new)
}

fn small_gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0usize..4).prop_map(|q| Gate::H { q }),
        (0usize..4).prop_map(|q| Gate::T { q }),
        (0usize..3).prop_map(|a| Gate::Cz { a, b: a + 1 }),
        (0usize..3).prop_map(|a| Gate::Swap { a, b: a + 1 }),
        (0usize..4, 0usize..4)
            .prop_filter("distinct", |(c, t)| c != t)
            .prop_map(|(c, t)| Gate::Cnot { c, t }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fidelity_is_symmetric_and_phase_blind(a in state(8), b in state(8), theta in 0.0f64..6.3) {
        let ab = fidelity_up_to_phase(&a, &b, 1e-12).unwrap();
        let ba = fidelity_up_to_phase(&b, &a, 1e-12).unwrap();
        assert_abs_diff_eq!(ab.fidelity, ba.fidelity, epsilon = 1e-14);
        let ph = C::from_polar(1.0, theta);
        let (pa, pb): (Vec<C>, Vec<C>) = (a.iter().map(|x| x * ph).collect(), b.iter().map(|x| x * ph).collect());
        let rotated = fidelity_up_to_phase(&pa, &pb, 1e-12).unwrap();
        assert_abs_diff_eq!(ab.fidelity, rotated.fidelity, epsilon = 1e-14);
        let self_fid = fidelity_up_to_phase(&a, &pa, 1e-12).unwrap();
        assert_abs_diff_eq!(self_fid.fidelity, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn column_action_is_unitary(s in 1usize..=3, parity in 0u8..2, seed in any::<u64>()) {
        let h = 2 * s;
        let p = ProgramColumn::from_basis_index(seed as usize % (1 << h), h);
        let u = column_unitary::<f64>(&u_of_p(&p, parity, s).unwrap(), h);
        prop_assert!(u.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn layers_and_programs_round_trip(s in 1usize..=3, cols in prop::collection::vec(any::<u64>(), 1..30)) {
        let h = 2 * s;
        let programs: Vec<ProgramColumn> = cols.iter().map(|&n| ProgramColumn::from_basis_index(n as usize % (1 << h), h)).collect();
        let layers = program_to_layers(&programs, s).unwrap();
        prop_assert_eq!(layers_to_program(&layers).unwrap(), programs);
    }

    #[test]
    fn program_text_round_trips(p in column(6)) {
        let text = p.to_string();
        prop_assert_eq!(text.len(), 6);
        prop_assert_eq!(text.parse::<ProgramColumn>().unwrap(), p);
    }

    #[test]
    fn step_then_inverse_is_identity(amps in state(256), t in 0usize..4, planar in any::<bool>()) {
        let topo = if planar { Topology::Planar } else { Topology::Torus };
        let spec = LatticeSpec::new(1, 2, topo).unwrap();
        let mut st = StateVector::from_amplitudes(spec, t, amps.clone()).unwrap();
        st.step();
        assert_abs_diff_eq!(st.norm(), 1.0, epsilon = 1e-12);
        st.inverse_step().unwrap();
        prop_assert!(inner(&amps, st.amplitudes()).norm() > 1.0 - 1e-12);
    }

    #[test]
    fn dump_round_trips(amps in state(256), t in 0usize..5) {
        let spec = LatticeSpec::torus(1, 2).unwrap();
        let st = StateVector::from_amplitudes(spec, t, amps).unwrap();
        let back = StateVector::<f64>::parse_dump(&st.dump()).unwrap();
        prop_assert_eq!(back.t(), t);
        prop_assert_eq!(back.spec(), st.spec());
        for (a, b) in back.amplitudes().iter().zip(st.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn partitions_tile_the_lattice(s in 1usize..=3, r in 2usize..=4, t in 0usize..4, planar in any::<bool>(), vertical in any::<bool>()) {
        let topo = if planar { Topology::Planar } else { Topology::Torus };
        let rem = if vertical { Remainders::SwapVertical } else { Remainders::SwapHorizontal };
        let spec = LatticeSpec::new(s, r, topo).unwrap().with_remainders(rem);
        let mut seen = vec![false; spec.num_qubits()];
        for cell in cells_of_step(t, &spec).cells {
            if let Cell::Full { .. } = cell {
                prop_assert_eq!(cell.sites().len(), 4);
            }
            for site in cell.sites() {
                let k = site_index(site.x, site.y, &spec).unwrap();
                prop_assert!(!seen[k]);
                seen[k] = true;
            }
        }
        prop_assert!(seen.into_iter().all(|b| b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compiled_circuits_match_reference(gates in prop::collection::vec(small_gate(), 0..4), x in state(16)) {
        let circuit = CircuitIR::new(4, gates);
        let compiled = compile(&circuit).unwrap();
        let spec = LatticeSpec::torus(compiled.s(), compiled.r).unwrap();
        let mut data = vec![x.clone()];
        data.extend((1..compiled.r).map(|k| qca_core::scalar::basis(16, k % 16)));
        let assign = ColumnAssignment { data, programs: compiled.programs() };
        let mut st = FactoredState::init(&assign, spec).unwrap();
        st.run(compiled.r);
        let expected = reference_simulate(&circuit, &x).unwrap();
        let eq = fidelity_up_to_phase(&expected, st.output_register(false).unwrap(), 1e-9).unwrap();
        prop_assert!(eq.pass, "fidelity {}", eq.fidelity);
    }

    #[test]
    fn single_precision_backends_agree(seed in any::<u64>()) {
        let spec = LatticeSpec::torus(1, 3).unwrap();
        let programs: Vec<ProgramColumn> = (0..3).map(|k| ProgramColumn::from_basis_index(((seed >> (2 * k)) & 3) as usize, 2)).collect();
        let assign = ColumnAssignment::<f32>::zero_data(&spec, programs);
        let mut dense = StateVector::init(&assign, spec).unwrap();
        let mut factored = FactoredState::init(&assign, spec).unwrap();
        for _ in 0..6 {
            dense.step();
            factored.step();
            let f = factored.to_dense().unwrap();
            let eq = fidelity_up_to_phase(f.amplitudes(), dense.amplitudes(), 1e-4).unwrap();
            prop_assert!(eq.pass, "fidelity {}", eq.fidelity);
        }
    }
}

#[test]
fn transition_unitary_is_unitary_in_both_precisions() {
    assert!(build_tau::<f64>().unitarity_deviation() < 1e-12);
    assert!(build_tau::<f32>().unitarity_deviation() < 1e-5);
}
