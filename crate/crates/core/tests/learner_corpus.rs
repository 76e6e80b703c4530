use elhlearn::gen::{corpus, GenConfig};
use elhlearn::learner::{aq, cqr, iq, Run};
use elhlearn::reasoner::{inseparable, Lang};
use elhlearn::teacher::{Policy, Session};
use std::time::Instant;

fn run(lang: Lang, policy: Policy, seed: u64, n: usize) {
    for inst in corpus(seed, n, &GenConfig::default()) {
        let start = Instant::now();
        let mut s = Session::new(inst.target.clone(), inst.abox.clone(), lang, policy).unwrap();
        let res: elhlearn::Result<Run> = match lang {
            Lang::Aq => aq::learn(&mut s, &aq::AqOptions::default()),
            Lang::Iq => iq::learn(&mut s, &iq::IqOptions::default()),
            Lang::Cqr => cqr::learn(&mut s, &iq::IqOptions::default()),
        };
        let run = res.unwrap_or_else(|e| panic!("seed {} {lang} {policy}: {e}\nT:\n{}\nA:\n{}", inst.seed, inst.target, inst.abox));
        assert!(
            inseparable(&inst.target, &run.hypothesis, &inst.abox, lang).is_yes(),
            "seed {} {lang}: not inseparable\nT:\n{}\nA:\n{}\nH:\n{}",
            inst.seed, inst.target, inst.abox, run.hypothesis
        );
        let el = start.elapsed();
        assert!(el.as_secs_f64() < 10.0, "seed {} {lang} took {el:?}", inst.seed);
    }
}

#[test]
fn aq_learner_on_random_targets() {
    run(Lang::Aq, Policy::MinimalDeterministic, 1000, 40);
}

#[test]
fn iq_learner_on_random_targets() {
    run(Lang::Iq, Policy::MinimalDeterministic, 2000, 40);
    run(Lang::Iq, Policy::SeedRandomized(5), 2100, 20);
}

#[test]
fn cqr_learner_on_random_targets() {
    run(Lang::Cqr, Policy::MinimalDeterministic, 3000, 20);
    run(Lang::Cqr, Policy::AdversarialCq, 3100, 20);
}
