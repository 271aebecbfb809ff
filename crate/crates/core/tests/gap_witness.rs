use spinal_spectra::bloch::{cantor_gap_witness, GeneratingSubset};
use spinal_spectra::SpinalParams;

const DEPTHS: [usize; 3] = [8, 10, 12];

#[test]
fn spinal_set_keeps_only_the_central_gap() {
    let g = SpinalParams::grigorchuk();
    let w = cantor_gap_witness(&GeneratingSubset::spinal(2).unwrap(), g.omega(), &DEPTHS).unwrap();
    assert_eq!(w.persistent.len(), 1);
    let (lo, hi) = w.persistent[0];
    // the gap (0, 1/2) between the two bands, to one grid step
    assert!(lo.abs() < 1e-3 && (hi - 0.5).abs() < 1e-3, "({lo}, {hi})");
}

#[test]
fn minimal_sets_keep_many_gaps() {
    let g = SpinalParams::grigorchuk();
    for t in ["a,b,c", "a,b,d"] {
        let w = cantor_gap_witness(&GeneratingSubset::parse(t, 2).unwrap(), g.omega(), &DEPTHS).unwrap();
        assert!(w.persistent.len() >= 20, "{t}: {} persistent gaps", w.persistent.len());
        assert!(w.counts().iter().all(|&c| c >= w.persistent.len()));
    }
}
