use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordbound::boundary::BoundarySchema;
use wordbound::encoder::{evaluate_mlm, ModelConfig, Parameters};
use wordbound::pretrain::{mask_examples, prepare_example, MaskingPolicy};
use wordbound::tokenizer::{train_wordpiece, MarkerMode, TokenizerConfig};
use wordbound::toy;

/// Sum of tensor sizes written out by hand.
fn closed_form(c: &ModelConfig) -> usize {
    let (v, d, f, l) = (c.vocab_size, c.d_model, c.d_ff, c.max_seq_len);
    let per_layer = 4 * (d * d + d) + (d * f + f) + (f * d + d) + 4 * d;
    let wb_rows = match c.wb_schema {
        BoundarySchema::Binary => 3,
        BoundarySchema::WordIndex => 257,
        BoundarySchema::SubwordIndex => 513,
        BoundarySchema::None | BoundarySchema::WbTokens => 0,
    };
    let boundary_head = if c.implicit_head { d * 3 + 3 } else { 0 };
    v * d + l * d + wb_rows * d + c.n_layers * per_layer + 2 * d + d * v + v + boundary_head
}

#[test]
fn counts_match_closed_form() {
    for schema in BoundarySchema::ALL {
        for implicit in [false, true] {
            for (v, d, f, layers) in [(8192, 256, 1024, 2), (50, 8, 12, 3)] {
                let c = ModelConfig {
                    n_layers: layers,
                    d_model: d,
                    d_ff: f,
                    n_heads: 2,
                    vocab_size: v,
                    wb_schema: schema,
                    implicit_head: implicit,
                    allow_wb_tokens_with_implicit: true,
                    ..Default::default()
                };
                let p = Parameters::<f32>::zeros(&c).unwrap();
                assert_eq!(p.num_params(), closed_form(&c), "{schema} {implicit} {v}");
            }
        }
    }
}

#[test]
fn schema_deltas_are_ordered() {
    let base = ModelConfig::very_low(8192);
    let count = |schema| {
        Parameters::<f32>::zeros(&ModelConfig {
            wb_schema: schema,
            ..base.clone()
        })
        .unwrap()
        .num_params() as f64
    };
    let none = count(BoundarySchema::None);
    assert_eq!(none, 5_848_064.0);
    assert_eq!(count(BoundarySchema::WbTokens), none);
    let pct = |s| 100.0 * (count(s) - none) / none;
    let (sub, word, bin) = (
        pct(BoundarySchema::SubwordIndex),
        pct(BoundarySchema::WordIndex),
        pct(BoundarySchema::Binary),
    );
    assert!(sub > word && word > bin && bin > 0.0);
    assert_eq!(format!("{sub:.1} {word:.1} {bin:.2}"), "2.2 1.1 0.01");
}

#[test]
fn initial_loss_is_near_uniform() {
    let corpus = toy::template_corpus(400, 5);
    let vocab = train_wordpiece(
        &corpus,
        &TokenizerConfig {
            vocab_size: 250,
            marker_mode: MarkerMode::Boundless,
            ..Default::default()
        },
    )
    .unwrap();
    let v = vocab.len() as f64;
    for implicit in [false, true] {
        let config = ModelConfig {
            n_layers: 2,
            n_heads: 4,
            d_model: 64,
            d_ff: 256,
            vocab_size: vocab.len(),
            max_seq_len: 64,
            implicit_head: implicit,
            ..Default::default()
        };
        let params = Parameters::<f32>::init(&config, 3).unwrap();
        let examples: Vec<_> = corpus
            .iter()
            .filter_map(|t| {
                prepare_example(&vocab, t, config.wb_schema, Default::default(), 64).unwrap()
            })
            .collect();
        let refs: Vec<_> = examples.iter().collect();
        let policy = MaskingPolicy::for_vocab(&vocab, 0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let masked = mask_examples(&refs, config.wb_schema, 0, &policy, &mut rng).unwrap();
        let loss = evaluate_mlm(&params, &config, &masked.batch, &masked.targets).unwrap();
        let token = loss.token as f64;
        assert!((token - v.ln()).abs() / v.ln() < 0.02, "{token}");
        if implicit {
            let total = loss.total as f64;
            let want = v.ln() + 3f64.ln();
            assert!((total - want).abs() / want < 0.02, "{total}");
        }
    }
}
