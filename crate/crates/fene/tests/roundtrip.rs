use fene::checkpoint::Checkpoint;
use fene::report::{read_records_csv, write_records_csv};
use fene_core::diagnostics::DiagnosticsRecord;
use fene_core::micromacro::MicroMacroState;
use fene_core::torus::VectorField;
use num_complex::Complex64;
use proptest::prelude::*;

const M: usize = 8;

fn spectrum(bits: &[u64]) -> Vec<Complex64> {
    bits.chunks(2)
        .map(|p| Complex64::new(f64::from_bits(p[0]), f64::from_bits(p[1])))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn checkpoint_bytes_survive_a_round_trip(
        bits in prop::collection::vec(any::<u64>(), 2 * M * M * 5),
        t in any::<u64>(),
        config in "[ -~\n]{0,200}",
    ) {
        let n = 2 * M * M;
        let ck = Checkpoint {
            config,
            m: M,
            state: MicroMacroState {
                u: VectorField { comps: [spectrum(&bits[..n]), spectrum(&bits[n..2 * n])] },
                c: bits[2 * n..].chunks(n).map(spectrum).collect(),
                t: f64::from_bits(t),
            },
        };
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        prop_assert_eq!(back.state.c.len(), 3);
    }

    #[test]
    fn csv_records_survive_a_round_trip(rows in prop::collection::vec(prop::array::uniform19(-1e300f64..1e300), 1..6)) {
        let records: Vec<_> = rows.into_iter().map(DiagnosticsRecord::from_values).collect();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        prop_assert_eq!(read_records_csv(buf.as_slice()).unwrap(), records);
    }
}
