//! Proptest strategies shared by the property suites.
#![allow(dead_code)]

use proptest::prelude::*;
use rubric_reward_core::schema::{
    Credit, Criterion, CriterionRecord, CriterionType, DiscreteCredit, Literal, Reference, Rubric, ScoringOutput,
    VerifierCall, VerifierName, Weight,
};

pub const TIME_FORMATS: &[&str] = &["%H:%M", "%I:%M %p", "%H:%M:%S", "%Y-%m-%d", "%d/%m/%Y %H:%M"];

/// Strings exercising the literal escapes.
pub fn word() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,'\\\\-]{0,12}"
}

pub fn str_list() -> impl Strategy<Value = Literal> {
    prop::collection::vec(word().prop_map(Literal::Str), 0..4).prop_map(Literal::List)
}

pub fn int_rows(width: usize) -> impl Strategy<Value = Literal> {
    prop::collection::vec(prop::collection::vec((-50i64..1100).prop_map(Literal::Int), width), 0..4)
        .prop_map(|rows| Literal::List(rows.into_iter().map(Literal::List).collect()))
}

/// A rubric-side call with only target arguments.
pub fn target_call() -> impl Strategy<Value = VerifierCall> {
    prop_oneof![
        (word(), any::<bool>(), any::<bool>()).prop_map(|(t, case, st)| {
            let mut c = VerifierCall::new(VerifierName::Text).with_arg("target", Literal::Str(t));
            if case {
                c = c.with_arg("ignore_case", Literal::Bool(true));
            }
            if st {
                c = c.with_arg("ignore_st", Literal::Bool(false));
            }
            c
        }),
        word().prop_map(|t| VerifierCall::new(VerifierName::Expr).with_arg("target", Literal::Str(t))),
        (word(), prop::sample::select(TIME_FORMATS)).prop_map(|(t, f)| {
            VerifierCall::new(VerifierName::Time)
                .with_arg("target", Literal::Str(t))
                .with_arg("tformat", Literal::Str(f.to_string()))
        }),
        str_list().prop_map(|t| VerifierCall::new(VerifierName::List).with_arg("target", t)),
        int_rows(4).prop_map(|t| VerifierCall::new(VerifierName::BBox).with_arg("target", t)),
        int_rows(2).prop_map(|t| VerifierCall::new(VerifierName::Point).with_arg("target", t)),
    ]
}

/// A scoring-side call for verifier `name`.
pub fn predict_call(name: VerifierName) -> BoxedStrategy<VerifierCall> {
    let c = VerifierCall::new(name);
    match name {
        VerifierName::Text | VerifierName::Expr => {
            word().prop_map(move |p| c.clone().with_arg("predict", Literal::Str(p))).boxed()
        }
        VerifierName::Time => (word(), prop::sample::select(TIME_FORMATS))
            .prop_map(move |(p, f)| {
                c.clone().with_arg("predict", Literal::Str(p)).with_arg("pformat", Literal::Str(f.to_string()))
            })
            .boxed(),
        VerifierName::List => str_list().prop_map(move |p| c.clone().with_arg("predict", p)).boxed(),
        VerifierName::BBox => int_rows(4).prop_map(move |p| c.clone().with_arg("predict", p)).boxed(),
        VerifierName::Point => int_rows(2).prop_map(move |p| c.clone().with_arg("predict", p)).boxed(),
    }
}

/// Plain-text reference that can never be mistaken for a call.
pub fn ground_truth() -> impl Strategy<Value = String> {
    "[a-z]{1,8}( [a-z]{1,8}){0,3}"
}

pub fn reference() -> impl Strategy<Value = Reference> {
    prop_oneof![ground_truth().prop_map(Reference::GroundTruth), target_call().prop_map(Reference::Verifier)]
}

fn section(ctype: CriterionType, min: usize, tag: &'static str) -> impl Strategy<Value = Vec<Criterion>> {
    prop::collection::vec(("[a-z]{1,10}( [a-z]{1,10}){0,2}", 1u8..=3, reference()), min..4).prop_map(move |items| {
        items
            .into_iter()
            .enumerate()
            .map(|(i, (d, w, reference))| Criterion {
                description: format!("{tag}{i} {d}."),
                ctype,
                weight: Weight::new(w).unwrap(),
                reference,
            })
            .collect()
    })
}

pub fn rubric() -> impl Strategy<Value = Rubric> {
    (section(CriterionType::Essential, 1, "E"), section(CriterionType::Additional, 0, "A"))
        .prop_map(|(essential, additional)| Rubric { essential, additional })
}

pub fn credit() -> impl Strategy<Value = DiscreteCredit> {
    prop::sample::select(vec![DiscreteCredit::Zero, DiscreteCredit::Half, DiscreteCredit::Full])
}

/// A record routed the way `criterion` prescribes.
pub fn routed_record(criterion: &Criterion) -> BoxedStrategy<CriterionRecord> {
    let description = criterion.description.clone();
    let credit: BoxedStrategy<Credit> = match criterion.reference.verifier() {
        Some(name) => predict_call(name).prop_map(Credit::Call).boxed(),
        None => credit().prop_map(Credit::Discrete).boxed(),
    };
    ("[a-z ]{0,20}", credit)
        .prop_map(move |(rationale, credit)| CriterionRecord { criterion: description.clone(), rationale, credit })
        .boxed()
}

/// A rubric with a scoring output mechanically derived from it.
pub fn rubric_with_scoring() -> impl Strategy<Value = (Rubric, ScoringOutput)> {
    rubric().prop_flat_map(|r| {
        let ess: Vec<_> = r.essential.iter().map(routed_record).collect();
        let add: Vec<_> = r.additional.iter().map(routed_record).collect();
        (Just(r), "[a-z ]{0,20}", ess, add)
            .prop_map(|(r, thought, essential, additional)| (r, ScoringOutput { thought, essential, additional }))
    })
}
