use carp_core::pipeline::{AnalysisReport, CardReport, Recommendation, StageTimings};
use carp_core::strategy::{Move, Rank, Role};
use carp_core::CardLabel;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

fn card() -> impl Strategy<Value = CardReport> {
    (
        proptest::array::uniform4(proptest::array::uniform2(finite())),
        0..CardLabel::ALL.len(),
        prop_oneof![Just(Role::Player), Just(Role::Dealer), Just(Role::Unassigned)],
        proptest::collection::vec(0.0f64..100.0, 0..4),
    )
        .prop_map(|(quad, l, role, distances)| CardReport {
            quad,
            label: CardLabel::ALL[l],
            role,
            distances,
        })
}

fn report() -> impl Strategy<Value = AnalysisReport> {
    (
        (1usize..5000, 1usize..5000),
        proptest::collection::vec(card(), 0..6),
        proptest::collection::vec(0..Rank::ALL.len(), 0..6),
        proptest::option::of(0..Rank::ALL.len()),
        proptest::option::of(0..Move::ALL.len()),
        proptest::option::of("[a-z ]{0,20}"),
        proptest::array::uniform5(0.0f64..1e4),
    )
        .prop_map(|((width, height), cards, hand, up, mv, note, t)| AnalysisReport {
            width,
            height,
            cards,
            player_hand: hand.into_iter().map(|i| Rank::ALL[i]).collect(),
            dealer_upcard: up.map(|i| Rank::ALL[i]),
            recommendation: mv.map(|i| Recommendation::new(Move::ALL[i])),
            note,
            timings_ms: StageTimings {
                segmentation: t[0],
                contours: t[1],
                reprojection: t[2],
                classification: t[3],
                total: t[4],
            },
        })
}

proptest! {
    #[test]
    fn report_json_round_trips(r in report()) {
        let text = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, r);
    }
}
