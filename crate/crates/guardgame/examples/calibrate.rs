//! scratch calibration probe
use guardgame::harness::{build_candidate_catalog, synth_corpus, CorpusConfig};
use guardgame::pipeline::{run_training, PipelineConfig, SeedSet, TrainingInputs};

fn main() {
    let corpus_config = CorpusConfig::default();
    for root in [11u64, 22, 33, 44, 55] {
        let corpus = synth_corpus(&corpus_config, root).unwrap();
        let seeds = SeedSet::ingest(corpus.train.clone()).unwrap();
        let catalog = build_candidate_catalog(&seeds, &corpus_config, 200, root).unwrap();
        let config = PipelineConfig::default();
        let inputs = TrainingInputs {
            seeds: &seeds,
            catalog: &catalog,
            eval_set: &corpus.test,
            language_names: &corpus_config.languages,
            alphabet_size: corpus_config.alphabet_size,
            config: &config,
        };
        let t0 = std::time::Instant::now();
        let run = run_training(&inputs, root).unwrap();
        for r in &run.reports {
            let minority: f64 = r.f1_per_language[1..].iter().sum::<f64>() / 3.0;
            println!(
                "root={root} iter={} size={} kept={} mis={} pairs={} loss={:.4} f1_overall={:.3} f1_lang={:?} minority={:.3} added={:?}",
                r.iteration, r.dataset_size, r.kept, r.misclassified, r.pair_count,
                r.classifier_train_loss, r.f1_overall,
                r.f1_per_language.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                minority, r.added_language_counts
            );
        }
        println!("  elapsed {:?}", t0.elapsed());
    }
}
