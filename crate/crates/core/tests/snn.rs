//! Network-level behaviour: inhibition, classification and learning on
//! synthetic patterns.

use melif_core::rng;
use melif_core::snn::*;
use rand::Rng;

/// Ten noisy bar patterns, one horizontal plus one vertical band per class.
fn bars(n: usize, seed: u64) -> Vec<LabeledImage> {
    let mut r = rng::stream(seed, 99, 0, 0);
    (0..n)
        .map(|k| {
            let label = (k % N_CLASSES) as u8;
            let pixels = (0..IMAGE_PIXELS)
                .map(|p| {
                    let (row, col) = (p / IMAGE_SIDE, p % IMAGE_SIDE);
                    let on = (row / 3) % 10 == label as usize || (col / 3) % 10 == label as usize;
                    if on && r.random::<f64>() < 0.8 {
                        255
                    } else {
                        0
                    }
                })
                .collect();
            LabeledImage { pixels, label }
        })
        .collect()
}

fn small_config(n: usize) -> SnnConfig {
    SnnConfig { n_excitatory: n, ..SnnConfig::default() }
}

/// Number of steps in which more than one neuron fires, over a random input drive.
fn cofiring_steps(inhibition: f64) -> usize {
    let mut r = rng::stream(4, 0, 0, 0);
    let w = SynapseMatrix::random(IMAGE_PIXELS, 30, 64, 1.0, 0.3, &mut r);
    let lif = LifParams { inhibition, ..LifParams::default() };
    let mut layer = LayerState::new(30);
    let mut n = 0;
    for _ in 0..2000 {
        let spikes: Vec<u32> = (0..IMAGE_PIXELS as u32).filter(|_| r.random::<f64>() < 0.02).collect();
        let fired = forward_step(&spikes, &w, &mut layer, &lif, 0.5e-3, &mut r).unwrap();
        n += (fired.len() > 1) as usize;
        lateral_inhibit(&fired, &mut layer, lif.inhibition);
    }
    n
}

#[test]
fn lateral_inhibition_sparsifies_firing() {
    let (free, inhibited) = (cofiring_steps(0.0), cofiring_steps(0.2));
    assert!(inhibited * 2 < free, "{inhibited} vs {free}");
}

#[test]
fn relabeling_groups_relabels_predictions() {
    let config = small_config(20);
    let (w, _) = train(&bars(60, 1), &config).unwrap();
    let topo = config.topology();
    // rotate every class label by three
    let rotated = NetworkTopology {
        group_assignment: topo.group_assignment.iter().map(|g| (g + 3) % N_CLASSES).collect(),
        ..topo.clone()
    };
    for (k, im) in bars(20, 2).iter().enumerate() {
        let a = classify(&im.pixels, &w, &topo, &config, &mut rng::stream(7, 0, 0, k as u64)).unwrap();
        let b = classify(&im.pixels, &w, &rotated, &config, &mut rng::stream(7, 0, 0, k as u64)).unwrap();
        if !a.tie {
            assert_eq!(b.class, a.class.map(|c| (c + 3) % N_CLASSES));
        }
    }
}

#[test]
fn training_on_bars_beats_chance() {
    let config = small_config(20);
    let (w, report) = train(&bars(200, 1), &config).unwrap();
    assert!(w.on_grid());
    let eval = evaluate_accuracy(&bars(100, 2), &w, &config).unwrap();
    assert!(eval.accuracy > 0.3, "accuracy {}", eval.accuracy);
    assert!(report.epochs[0].mean_post_spikes() > 0.0);
}

#[test]
fn frozen_weights_stay_at_chance() {
    let mut config = small_config(20);
    config.stdp.eta_plus = 0.0;
    config.stdp.eta_minus = 0.0;
    let (w, _) = train(&bars(40, 1), &config).unwrap();
    let eval = evaluate_accuracy(&bars(200, 2), &w, &config).unwrap();
    assert!(eval.accuracy < 0.3, "accuracy {}", eval.accuracy);
}

#[test]
fn evaluation_does_not_depend_on_thread_count() {
    let config = small_config(20);
    let (w, _) = train(&bars(30, 1), &config).unwrap();
    let test = bars(30, 2);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| evaluate_accuracy(&test, &w, &config).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn training_is_seed_deterministic() {
    let data = bars(30, 1);
    let a = train(&data, &small_config(10)).unwrap().0;
    let b = train(&data, &small_config(10)).unwrap().0;
    let c = train(&data, &SnnConfig { seed: 1, ..small_config(10) }).unwrap().0;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
