use greedy_fde::io::{flag_rows, read_epochs, write_flags, write_measurements, LoadOptions};
use greedy_fde::sim::{simulate, ScenarioConfig};
use greedy_fde::{run_fde, FdeMethod, FdeOptions};

fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        seed: 99,
        duration_h: 0.5,
        ..ScenarioConfig::default()
    }
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let epochs = simulate(&small_config()).unwrap().epochs;
    let mut buf = Vec::new();
    write_measurements(&mut buf, &epochs).unwrap();
    let back = read_epochs(buf.as_slice(), &LoadOptions::default()).unwrap();

    assert_eq!(back.len(), epochs.len());
    for (a, b) in epochs.iter().zip(&back) {
        assert_eq!(a.trace_id, b.trace_id);
        assert_eq!(a.timestamp.to_bits(), b.timestamp.to_bits());
        assert_eq!(a.truth_rx_pos, b.truth_rx_pos);
        assert_eq!(a.measurements, b.measurements);
        assert_eq!(a.conditioned_pseudoranges(), b.conditioned_pseudoranges());
    }
}

#[test]
fn flag_csv_has_one_row_per_measurement() {
    let epochs = simulate(&small_config()).unwrap().epochs;
    let results: Vec<_> = epochs
        .iter()
        .map(|e| run_fde(e, FdeMethod::Residual, 100.0, &FdeOptions::default()).unwrap())
        .collect();
    let rows: usize = epochs.iter().zip(&results).map(|(e, r)| flag_rows(e, r).len()).sum();
    assert_eq!(rows, epochs.iter().map(|e| e.len()).sum::<usize>());

    let mut buf = Vec::new();
    write_flags(&mut buf, &epochs, &results).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rows + 1);
}
