//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the numbered lines come out
//! in order; the process fails if any criterion fails.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use wordbound::boundary::{annotate, detokenize_with_boundaries, BoundarySchema};
use wordbound::encoder::gradcheck::{grad_check, TOLERANCE};
use wordbound::encoder::{evaluate_mlm, Checkpoint, CheckpointHeader, ModelConfig, Parameters};
use wordbound::morpho::{boundary_set, evaluate, vocab_redundancy, GoldSegmentation};
use wordbound::pretrain::{
    finetune, lr_at, mask_examples, prepare_example, FinetuneConfig, FinetuneData, MaskingPolicy,
    PretrainError, Pretrainer, SequenceExample, TrainConfig, WbInjection,
};
use wordbound::tokenizer::{
    pretokenize, train_wordpiece, EncodeOptions, MarkerMode, TokenizerConfig, Vocabulary,
    CONTINUATION_PREFIX,
};
use wordbound::toy;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, took: Duration, what: &str) -> Result<(), String> {
    ensure(took < limit, || {
        format!(
            "{what} took {:.1}s, limit {:.0}s",
            took.as_secs_f64(),
            limit.as_secs_f64()
        )
    })
}

// 1. greedy encoding

const ALPHABET: [u8; 7] = *b"abuntel";
const MARKED: [&str; 15] = [
    "un", "beat", "able", "a", "b", "t", "##beat", "##able", "##b", "##e", "##a", "##t", "##l",
    "##n", "##ble",
];
const BOUNDLESS: [&str; 15] = [
    "un", "beat", "able", "a", "b", "u", "n", "t", "e", "l", "ab", "tab", "le", "unbe", "bea",
];

/// Entries that may match at a cursor, bucketed by their first byte.
type Buckets<'a> = [Vec<(&'a [u8], u32)>; 256];

/// Try every allowed entry at every cursor and keep the longest match.
fn brute_force(initial: &Buckets, continuation: &Buckets, word: &[u8], out: &mut Vec<u32>) -> bool {
    out.clear();
    let mut cursor = 0;
    while cursor < word.len() {
        let entries = if cursor == 0 { initial } else { continuation };
        let mut best: Option<(usize, u32)> = None;
        for &(surface, id) in &entries[word[cursor] as usize] {
            if word[cursor..].starts_with(surface)
                && best.is_none_or(|(len, _)| surface.len() > len)
            {
                best = Some((surface.len(), id));
            }
        }
        let Some((len, id)) = best else {
            return false;
        };
        out.push(id);
        cursor += len;
    }
    true
}

fn greedy_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for (list, mode) in [
        (&MARKED, MarkerMode::Marked),
        (&BOUNDLESS, MarkerMode::Boundless),
    ] {
        let vocab = Vocabulary::from_pieces(list.iter().copied(), mode).unwrap();
        let marked = mode == MarkerMode::Marked;
        let mut initial: Buckets = std::array::from_fn(|_| Vec::new());
        let mut continuation: Buckets = std::array::from_fn(|_| Vec::new());
        for e in list.iter() {
            let id = vocab.id(e).unwrap();
            let (surface, at_start, inside) = match e.strip_prefix(CONTINUATION_PREFIX) {
                Some(s) if marked => (s.as_bytes(), false, true),
                _ => (e.as_bytes(), true, !marked),
            };
            if at_start {
                initial[surface[0] as usize].push((surface, id));
            }
            if inside {
                continuation[surface[0] as usize].push((surface, id));
            }
        }
        let unk = vocab.specials().unk;
        let mut word: Vec<u8> = Vec::with_capacity(8);
        let mut want = Vec::with_capacity(8);
        let mut stack = vec![0usize];
        // odometer over all words of length 1..=8
        while let Some(&top) = stack.last() {
            if top == ALPHABET.len() {
                stack.pop();
                word.pop();
                if let Some(t) = stack.last_mut() {
                    *t += 1;
                }
                continue;
            }
            word.push(ALPHABET[top]);
            if !brute_force(&initial, &continuation, &word, &mut want) {
                want.clear();
                want.push(unk);
            }
            let text = std::str::from_utf8(&word).unwrap();
            let got = vocab.encode_word_ids(text);
            if got != want {
                return Err(format!("{mode} `{text}`: got {got:?}, oracle {want:?}"));
            }
            if word.len() <= 6 {
                let pieces: Vec<&str> = want.iter().map(|&id| vocab.token(id).unwrap()).collect();
                let strings = vocab.encode_word(text);
                ensure(strings == pieces, || {
                    format!("{mode} `{text}`: encode_word {strings:?}")
                })?;
            }
            checked += 1;
            if word.len() < 8 {
                stack.push(0);
            } else {
                word.pop();
                *stack.last_mut().unwrap() += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(checked == 2 * 6_725_600, || {
        format!("enumerated {checked} words")
    })?;
    within(Duration::from_secs(5), took, "enumeration")?;
    Ok(format!(
        "{checked} words, both modes, {:.2}s",
        took.as_secs_f64()
    ))
}

// 2. morph evaluation

const TWENTY: [(&str, &str); 20] = [
    ("hypo respons iveness", "hypo|respons|iveness"),
    ("und es ira ble", "un|desir|able"),
    ("unbeat able", "un|beat|able"),
    ("un beat en", "un|beat|en"),
    ("walk ers", "walk|er|s"),
    ("re play ed", "re|play|ed"),
    ("dis ag ree ment", "dis|agree|ment"),
    ("happiness", "happi|ness"),
    ("cat", "cat"),
    ("do g", "dog"),
    ("over load ing", "over|load|ing"),
    ("mis under stand ing", "mis|understand|ing"),
    ("kind ness", "kind|ness"),
    ("teach er s", "teach|er|s"),
    ("pre view", "pre|view"),
    ("in cred ible", "in|cred|ible"),
    ("nation al ize", "nation|al|ize"),
    ("black bird", "black|bird"),
    ("thought ful ly", "thought|ful|ly"),
    ("un help ful", "un|help|ful"),
];

fn pieces(s: &str, sep: char) -> Vec<String> {
    s.split(sep).map(String::from).collect()
}

/// Character offsets where a piece ends, strictly inside the word.
fn offsets(p: &[String]) -> Vec<usize> {
    let total: usize = p.iter().map(|x| x.chars().count()).sum();
    (1..total)
        .filter(|&k| {
            let mut acc = 0;
            p.iter().any(|x| {
                acc += x.chars().count();
                acc == k
            })
        })
        .collect()
}

fn morph_oracle() -> Outcome {
    let rows: Vec<(Vec<String>, Vec<String>)> = TWENTY
        .iter()
        .map(|(p, g)| (pieces(p, ' '), pieces(g, '|')))
        .collect();
    let (mut hit, mut np, mut ng, mut len) = (0usize, 0usize, 0usize, 0usize);
    for (p, g) in &rows {
        let (po, go) = (offsets(p), offsets(g));
        hit += po.iter().filter(|k| go.contains(k)).count();
        np += po.len();
        ng += go.len();
        len += p.len();
    }
    let precision = hit as f64 / np as f64;
    let recall = hit as f64 / ng as f64;
    let f1 = 2.0 * precision * recall / (precision + recall);
    let avg_len = len as f64 / rows.len() as f64;

    let gold: Vec<GoldSegmentation> = rows
        .iter()
        .map(|(_, g)| GoldSegmentation::new(g.concat(), g.clone()))
        .collect();
    let preds: HashMap<String, Vec<String>> =
        rows.iter().map(|(p, g)| (g.concat(), p.clone())).collect();
    let r = evaluate(&preds, &gold).map_err(|e| e.to_string())?;
    for (name, a, b) in [
        ("precision", r.precision, precision),
        ("recall", r.recall, recall),
        ("f1", r.f1, f1),
        ("avg_len", r.avg_len, avg_len),
    ] {
        ensure((a - b).abs() <= 1e-12, || {
            format!("{name}: {a} vs oracle {b}")
        })?;
    }

    let single = |p: &str, g: &str| {
        let gold = [GoldSegmentation::new(g.replace('|', ""), pieces(g, '|'))];
        evaluate(
            &HashMap::from([(g.replace('|', ""), pieces(p, ' '))]),
            &gold,
        )
        .unwrap()
    };
    let exact = single("hypo respons iveness", "hypo|respons|iveness");
    ensure(
        (exact.precision, exact.recall, exact.f1) == (1.0, 1.0, 1.0),
        || "exact match not perfect".into(),
    )?;
    ensure(
        boundary_set(&pieces("und es ira ble", ' ')) == [3, 5, 8].into()
            && boundary_set(&pieces("un|desir|able", '|')) == [2, 7].into(),
        || "offset sets differ from {3,5,8} / {2,7}".into(),
    )?;
    let zero = single("und es ira ble", "un|desir|able");
    ensure(
        (zero.precision, zero.recall, zero.f1) == (0.0, 0.0, 0.0),
        || format!("und es ira ble scored {zero:?}"),
    )?;
    let half = single("unbeat able", "un|beat|able");
    ensure(
        half.precision == 1.0 && half.recall == 0.5 && (half.f1 - 2.0 / 3.0).abs() < 1e-12,
        || format!("unbeat able scored {half:?}"),
    )?;
    Ok(format!(
        "P {precision:.4} R {recall:.4} F1 {f1:.4} len {avg_len:.2}; worked examples reproduce"
    ))
}

// 3. redundancy

fn redundancy() -> Outcome {
    let toy_corpus = vec!["unbeatable un beat able".to_string(); 1000];
    let marked = train_wordpiece(
        &toy_corpus,
        &TokenizerConfig {
            vocab_size: 40,
            marker_mode: MarkerMode::Marked,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let r = vocab_redundancy(&marked);
    ensure(r > 0.0, || "marked redundancy is 0".into())?;
    for corpus in [
        toy_corpus.clone(),
        toy::template_corpus(500, 1),
        vec!["Über-naïve café, déjà vu!".to_string(); 5],
    ] {
        for size in [60, 120, 400] {
            let v = train_wordpiece(
                &corpus,
                &TokenizerConfig {
                    vocab_size: size,
                    marker_mode: MarkerMode::Boundless,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            ensure(vocab_redundancy(&v) == 0.0, || {
                "boundless redundancy > 0".into()
            })?;
        }
    }
    let dual: Vec<&str> = marked
        .tokens()
        .iter()
        .filter_map(|t| t.strip_prefix(CONTINUATION_PREFIX))
        .filter(|s| marked.contains(s))
        .collect();
    Ok(format!(
        "marked toy {r:.4} (dual entries {}), boundless 0.0 on 9 vocabularies",
        dual.join(" ")
    ))
}

// 4. lossless reconstruction

fn lossless() -> Outcome {
    let corpus = toy::template_corpus(1000, 11);
    let vocab = train_wordpiece(
        &corpus,
        &TokenizerConfig {
            vocab_size: 250,
            marker_mode: MarkerMode::Boundless,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut ok = 0;
    for text in &corpus {
        let enc = vocab.encode(text, EncodeOptions { wrap: true });
        let ann = annotate(&enc).map_err(|e| e.to_string())?;
        let back = detokenize_with_boundaries(&enc.tokens, &ann.binary).unwrap();
        if back == pretokenize(text, true).join(" ") {
            ok += 1;
        }
    }
    ensure(ok == corpus.len(), || {
        format!("{ok}/{} sentences restored", corpus.len())
    })?;
    Ok(format!("{ok}/{} sentences", corpus.len()))
}

// 5. gradients

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for schema in BoundarySchema::ALL {
        for implicit in [false, true] {
            let r = grad_check(schema, implicit, 0).map_err(|e| e.to_string())?;
            ensure(r.checked == 200, || {
                format!("{schema}: checked {}", r.checked)
            })?;
            ensure(r.passed(), || {
                format!(
                    "{schema} implicit={implicit}: {:.3e} at {}",
                    r.max_rel_error, r.worst
                )
            })?;
            worst = worst.max(r.max_rel_error);
        }
    }
    within(Duration::from_secs(120), start.elapsed(), "gradient checks")?;
    Ok(format!(
        "10 configurations, max rel error {worst:.2e} < {TOLERANCE:e}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

// 6. parameter counts

fn param_counts() -> Outcome {
    let base = ModelConfig::very_low(8192);
    let closed = |c: &ModelConfig| {
        let (v, d, f, l) = (c.vocab_size, c.d_model, c.d_ff, c.max_seq_len);
        let layer = 4 * d * d + 4 * d + 2 * d * f + f + d + 4 * d;
        let rows = c.wb_schema.table_rows().unwrap_or(0);
        let head = if c.implicit_head { 3 * d + 3 } else { 0 };
        2 * v * d + v + l * d + rows * d + c.n_layers * layer + 2 * d + head
    };
    let mut counts = HashMap::new();
    for schema in BoundarySchema::ALL {
        for implicit in [false, true] {
            let c = ModelConfig {
                wb_schema: schema,
                implicit_head: implicit,
                allow_wb_tokens_with_implicit: true,
                ..base.clone()
            };
            let n = Parameters::<f32>::zeros(&c).unwrap().num_params();
            ensure(n == closed(&c), || {
                format!("{schema}: {n} vs {}", closed(&c))
            })?;
            if !implicit {
                counts.insert(schema, n as f64);
            }
        }
    }
    let none = counts[&BoundarySchema::None];
    let pct = |s| 100.0 * (counts[&s] - none) / none;
    let (sub, word, bin) = (
        pct(BoundarySchema::SubwordIndex),
        pct(BoundarySchema::WordIndex),
        pct(BoundarySchema::Binary),
    );
    ensure(sub > word && word > bin && bin > 0.0, || {
        format!("deltas out of order: {sub} {word} {bin}")
    })?;
    ensure(
        (sub - 2.3).abs() < 0.1 && (word - 1.1).abs() < 0.05 && (bin - 0.01).abs() < 0.005,
        || format!("deltas {sub:.3}% {word:.3}% {bin:.4}%"),
    )?;
    Ok(format!(
        "base {none} params; subword +{sub:.2}% > word +{word:.2}% > binary +{bin:.3}%"
    ))
}

// 7. initial loss

fn initial_loss() -> Outcome {
    let corpus = toy::template_corpus(400, 5);
    let vocab = train_wordpiece(
        &corpus,
        &TokenizerConfig {
            vocab_size: 250,
            ..Default::default()
        },
    )
    .unwrap();
    let ln_v = (vocab.len() as f64).ln();
    let mut detail = Vec::new();
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
        let params = Parameters::<f32>::init(&config, 0).unwrap();
        let examples: Vec<_> = corpus
            .iter()
            .filter_map(|t| {
                prepare_example(&vocab, t, config.wb_schema, Default::default(), 64).unwrap()
            })
            .collect();
        let refs: Vec<_> = examples.iter().collect();
        let policy = MaskingPolicy::for_vocab(&vocab, 0.15);
        let mut rng = wordbound::pretrain::step_rng(0, 0);
        let m = mask_examples(
            &refs,
            config.wb_schema,
            vocab.specials().pad,
            &policy,
            &mut rng,
        )
        .unwrap();
        let loss = evaluate_mlm(&params, &config, &m.batch, &m.targets).unwrap();
        let tok = loss.token as f64;
        ensure((tok - ln_v).abs() / ln_v < 0.02, || {
            format!("token loss {tok} vs ln|V| {ln_v}")
        })?;
        if implicit {
            let want = ln_v + 3f64.ln();
            let total = loss.total as f64;
            ensure((total - want).abs() / want < 0.02, || {
                format!("combined loss {total} vs {want}")
            })?;
            detail.push(format!("combined {total:.4} vs {want:.4}"));
        } else {
            detail.push(format!("token {tok:.4} vs ln|V| {ln_v:.4}"));
        }
    }
    Ok(detail.join(", "))
}

// 8-10. training

struct DeskRun {
    vocab: Vocabulary,
    corpus: Vec<String>,
    model: ModelConfig,
    train: TrainConfig,
}

fn desk_run() -> DeskRun {
    let corpus = toy::template_corpus(200, 0);
    let vocab = train_wordpiece(
        &corpus,
        &TokenizerConfig {
            vocab_size: 320,
            marker_mode: MarkerMode::Boundless,
            ..Default::default()
        },
    )
    .unwrap();
    let model = ModelConfig {
        n_layers: 2,
        n_heads: 4,
        d_model: 64,
        d_ff: 256,
        vocab_size: vocab.len(),
        max_seq_len: 64,
        implicit_head: true,
        ..Default::default()
    };
    let train = TrainConfig {
        batch_size: 16,
        total_steps: 300,
        seq_len: 64,
        peak_lr: 1.5e-3,
        seed: 1,
        eval_every: 100,
        ..Default::default()
    };
    DeskRun {
        vocab,
        corpus,
        model,
        train,
    }
}

fn training_sanity(desk: &DeskRun, trained: &mut Option<Parameters<f32>>) -> Outcome {
    let start = Instant::now();
    let p = Pretrainer::new(
        &desk.vocab,
        &desk.corpus,
        desk.model.clone(),
        desk.train.clone(),
    )
    .map_err(|e| e.to_string())?;
    let out = p.run(None, None).map_err(|e| e.to_string())?;
    let m = &out.metrics;
    let first = m[0].train_loss;
    let last = m[m.len() - 10..].iter().map(|r| r.train_loss).sum::<f64>() / 10.0;
    let ratio = last / first;
    // score the boundary head on the whole corpus with one fixed masking draw
    let all: Vec<_> = p.train_set().iter().chain(p.eval_set()).cloned().collect();
    let e = p
        .evaluate_on(&out.params, &all)
        .map_err(|e| e.to_string())?;
    let acc = e.boundary_acc.ok_or("no boundary head")?;
    let (initial, internal) = all
        .iter()
        .flat_map(|x| &x.labels)
        .fold((0usize, 0usize), |(a, b), &l| {
            (a + (l == 1) as usize, b + (l == 2) as usize)
        });
    let majority = initial.max(internal) as f64 / (initial + internal) as f64;
    let took = start.elapsed();
    *trained = Some(out.params);
    ensure(ratio <= 0.5, || {
        format!("loss {first:.3} -> {last:.3}, ratio {ratio:.3}")
    })?;
    ensure(acc >= 0.90, || format!("boundary accuracy {acc:.3}"))?;
    ensure(acc > majority, || {
        format!("accuracy {acc:.3} not above majority {majority:.3}")
    })?;
    within(Duration::from_secs(600), took, "training")?;
    Ok(format!(
        "loss {first:.3} -> {last:.3} (ratio {ratio:.3}), masked boundary acc {acc:.3} \
         (majority {majority:.3}), {:.1}s",
        took.as_secs_f64()
    ))
}

fn wb_tokens_direction(desk: &DeskRun) -> Outcome {
    let mean_loss = |schema| -> Result<f64, String> {
        let model = ModelConfig {
            wb_schema: schema,
            implicit_head: false,
            ..desk.model.clone()
        };
        let p = Pretrainer::new(&desk.vocab, &desk.corpus, model, desk.train.clone())
            .map_err(|e| e.to_string())?;
        let m = p.run(None, None).map_err(|e| e.to_string())?.metrics;
        Ok(m.iter().map(|r| r.train_token_loss).sum::<f64>() / m.len() as f64)
    };
    let none = mean_loss(BoundarySchema::None)?;
    let wb = mean_loss(BoundarySchema::WbTokens)?;
    ensure(wb < none, || format!("wb-tokens {wb:.4} vs none {none:.4}"))?;
    Ok(format!(
        "mean MLM loss wb-tokens {wb:.4} < none {none:.4} ({:.0}%)",
        100.0 * wb / none
    ))
}

fn finetuning(desk: &DeskRun, trained: &Option<Parameters<f32>>) -> Outcome {
    let params = trained
        .as_ref()
        .ok_or("no pretrained model from criterion 8")?;
    let header = |config: ModelConfig| CheckpointHeader {
        config,
        seed: desk.train.seed,
        step: desk.train.total_steps,
        extra: Default::default(),
    };
    let ckpt = Checkpoint::new(header(desk.model.clone()), params, None);
    let wrap = |v: Vec<(String, String)>| {
        v.into_iter()
            .map(|(label, text)| SequenceExample { label, text })
            .collect()
    };
    let data = FinetuneData::Sequence {
        train: wrap(toy::separable_classification(2000, 10)),
        dev: wrap(toy::separable_classification(200, 11)),
    };
    let mut scores = Vec::new();
    for injection in [
        WbInjection::None,
        WbInjection::FtBinary,
        WbInjection::FtWbTokens,
    ] {
        let cfg = FinetuneConfig {
            batch_size: 32,
            lr: 2e-5,
            warmup_fraction: 0.05,
            epochs: 15,
            wb_injection: injection,
            seeds: vec![0],
            ..Default::default()
        };
        let r = finetune(&ckpt, &desk.vocab, &data, &cfg).map_err(|e| e.to_string())?;
        let best = r.seeds[0].best;
        ensure(best >= 0.95, || {
            format!("{injection:?} best dev accuracy {best:.3}")
        })?;
        scores.push(format!("{injection:?} {best:.3}"));
    }

    let binary_model = ModelConfig {
        wb_schema: BoundarySchema::Binary,
        implicit_head: false,
        ..desk.model.clone()
    };
    let binary_params = Parameters::<f32>::init(&binary_model, 0).unwrap();
    let binary_ckpt = Checkpoint::new(header(binary_model), &binary_params, None);
    let cfg = FinetuneConfig {
        wb_injection: WbInjection::FtBinary,
        seeds: vec![0],
        epochs: 1,
        ..Default::default()
    };
    match finetune(&binary_ckpt, &desk.vocab, &data, &cfg) {
        Err(PretrainError::SchemaConflict(_)) => {}
        other => {
            return Err(format!(
                "expected SchemaConflict, got {:?}",
                other.map(|r| r.mean)
            ))
        }
    }
    Ok(format!(
        "best-epoch dev accuracy {}; SchemaConflict raised",
        scores.join(", ")
    ))
}

// 11. determinism

fn run_cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wordbound"))
        .args(args)
        .current_dir(dir)
        .env_remove("WORDBOUND_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(
        d.join("corpus.txt"),
        toy::template_corpus(150, 4).join("\n"),
    )
    .unwrap();
    fs::write(
        d.join("exp.toml"),
        "seed = 3\n[corpus]\ntrain = [\"corpus.txt\"]\n[tokenizer]\nvocab_size = 120\n\
         [model]\nn_layers = 1\nn_heads = 2\nd_model = 16\nd_ff = 32\nmax_seq_len = 32\n\
         implicit_head = true\nwb_schema = \"subword-index\"\n\
         [train]\nbatch_size = 8\ntotal_steps = 30\nseq_len = 32\npeak_lr = 1e-3\n\
         eval_every = 10\ncheckpoint_every = 15\n",
    )
    .unwrap();
    for run in ["a", "b"] {
        run_cli(
            &[
                "train-tokenizer",
                "--mode",
                "marked",
                "--vocab-size",
                "150",
                "corpus.txt",
                "-o",
                &format!("{run}/tok/vocab.txt"),
            ],
            d,
        )?;
        run_cli(
            &["pretrain", "exp.toml", "--out-dir", &format!("{run}/pre")],
            d,
        )?;
    }
    let files = [
        "tok/vocab.txt",
        "tok/tokenizer_report.json",
        "pre/vocab.txt",
        "pre/metrics.jsonl",
        "pre/step-000015.ckpt",
        "pre/step-000030.ckpt",
        "pre/final.ckpt",
    ];
    let mut bytes = 0;
    for f in files {
        let a = fs::read(d.join("a").join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = fs::read(d.join("b").join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
        bytes += a.len();
    }
    Ok(format!(
        "{} files byte-identical across two CLI runs ({bytes} bytes)",
        files.len()
    ))
}

// 12. schedule

fn schedule() -> Outcome {
    let c = TrainConfig {
        total_steps: 1000,
        peak_lr: 1e-4,
        ..Default::default()
    };
    let w = c.warmup();
    ensure(w == 60, || format!("warmup {w}"))?;
    let at = |k| lr_at(k, &c).map_err(|e| e.to_string());
    ensure(at(0)? == 0.0, || "lr(0) != 0".into())?;
    ensure(at(w)? == 1e-4, || {
        format!("lr(warmup) = {}", at(w).unwrap())
    })?;
    ensure(at(1000)? == 0.0, || "lr(total) != 0".into())?;
    for k in 0..=1000u64 {
        let want = if k <= w {
            1e-4 * k as f64 / w as f64
        } else {
            1e-4 * (1000 - k) as f64 / (1000 - w) as f64
        };
        let got = at(k)?;
        ensure((got - want).abs() <= 1e-18, || {
            format!("lr({k}) = {got}, want {want}")
        })?;
    }
    ensure(lr_at(1001, &c).is_err(), || "lr past total accepted".into())?;
    Ok(format!("1001 points, warmup {w}, peak 1e-4 exact"))
}

fn main() {
    let desk = desk_run();
    let mut trained = None;
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match &outcome {
        Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("FAIL {n:>2} {name}: {why}")
        }
    };
    report(1, "greedy encoding oracle", greedy_oracle());
    report(2, "morph-eval oracle", morph_oracle());
    report(3, "vocabulary redundancy", redundancy());
    report(4, "lossless equivalence", lossless());
    report(5, "gradient checks", gradients());
    report(6, "parameter counts", param_counts());
    report(7, "initial loss", initial_loss());
    report(8, "training sanity", training_sanity(&desk, &mut trained));
    report(9, "wb-tokens MLM direction", wb_tokens_direction(&desk));
    report(10, "finetune mechanism", finetuning(&desk, &trained));
    report(11, "CLI determinism", determinism());
    report(12, "lr schedule", schedule());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
