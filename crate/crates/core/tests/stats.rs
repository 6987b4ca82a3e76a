use indecision::stats::{
    chi_squared_2x2, chi_squared_sf_1, effective_counts, hypothesis_tests_from_counts,
    run_hypothesis_tests, tally_votes, AggregateCounts, NullElectorate, DEFAULT_ALPHA,
};
use indecision::{ComparisonQuery, Mode, Record, Response, ResponseDataset};

/// Per-question votes of the pilot survey: indecisive group (majority,
/// minority, flips) and strict group (majority, minority).
const PILOT: [(u32, u32, u32, u32, u32); 15] = [
    (31, 5, 2, 38, 22),
    (48, 2, 12, 50, 10),
    (43, 2, 17, 57, 3),
    (40, 13, 9, 42, 18),
    (37, 0, 25, 51, 9),
    (55, 0, 7, 57, 3),
    (43, 1, 18, 56, 4),
    (37, 9, 16, 48, 12),
    (29, 8, 25, 43, 17),
    (22, 5, 35, 54, 6),
    (41, 12, 9, 43, 17),
    (51, 3, 8, 54, 6),
    (29, 4, 29, 55, 5),
    (42, 1, 19, 56, 4),
    (33, 9, 20, 47, 13),
];

/// One question answered by `votes.len()` voters. Odd questions put the
/// majority patient second.
fn question(q: usize, mode: Mode, votes: &[(Response, u32)]) -> ResponseDataset {
    let query = ComparisonQuery::from_features(vec![0.1 * q as f64, 0.3], vec![0.5, 0.2])
        .unwrap()
        .with_id(q);
    let mut data = ResponseDataset::empty(mode);
    let mut voter = 0;
    for &(response, n) in votes {
        let response = if q % 2 == 1 { response.swapped() } else { response };
        for _ in 0..n {
            data.push(Record {
                voter_id: format!("p{voter:02}"),
                query: query.clone(),
                response,
            })
            .unwrap();
            voter += 1;
        }
    }
    data
}

#[test]
fn pilot_questions_tally_back_to_the_table() {
    let mut totals = [0.0; 5];
    for (q, &(maj, min, flip, smaj, smin)) in PILOT.iter().enumerate() {
        let ind = question(
            q,
            Mode::Indecisive,
            &[(Response::PreferFirst, maj), (Response::PreferSecond, min), (Response::Indecision, flip)],
        );
        let strict = question(q, Mode::Strict, &[(Response::PreferFirst, smaj), (Response::PreferSecond, smin)]);
        let t = &tally_votes(&ind).unwrap().questions[0];
        let s = &tally_votes(&strict).unwrap().questions[0];
        let expected_side = if q % 2 == 1 { Response::PreferSecond } else { Response::PreferFirst };
        assert_eq!(t.majority, expected_side);
        assert_eq!(s.majority, t.majority);
        assert_eq!((t.majority_count, t.minority_count, t.flip_count), (maj as f64, min as f64, flip as f64));
        assert_eq!((s.majority_count, s.minority_count, s.flip_count), (smaj as f64, smin as f64, 0.0));
        assert!(!t.tie && !s.tie);
        for (acc, x) in totals.iter_mut().zip([t.majority_count, t.minority_count, t.flip_count, s.majority_count, s.minority_count]) {
            *acc += x;
        }
    }
    // The per-question flips add up to 251; the prose total of 275 is used
    // for the aggregate tests below.
    assert_eq!(totals, [581.0, 74.0, 251.0, 751.0, 149.0]);
    assert_eq!(PILOT[0].0 + PILOT[0].1 + PILOT[0].2, 38);
    assert!(PILOT[1..].iter().all(|r| r.0 + r.1 + r.2 == 62 && r.3 + r.4 == 60));
}

#[test]
fn ties_and_one_sided_questions() {
    let tie = question(0, Mode::Strict, &[(Response::PreferFirst, 4), (Response::PreferSecond, 4)]);
    let t = &tally_votes(&tie).unwrap().questions[0];
    assert!(t.tie);
    assert_eq!(t.majority, Response::PreferFirst);
    let sided = question(1, Mode::Strict, &[(Response::PreferFirst, 7)]);
    assert_eq!(tally_votes(&sided).unwrap().questions[0].minority_count, 0.0);
}

#[test]
fn effective_vote_examples() {
    let e = |m, n, f| effective_counts(AggregateCounts::new(m, n, f).unwrap());
    assert_eq!(e(581.0, 74.0, 275.0), (718.5, 211.5));
    assert_eq!(e(12.0, 5.0, 0.0), (12.0, 5.0));
    assert_eq!(e(0.0, 0.0, 2.0), (1.0, 1.0));
}

/// `N (ad - bc)^2 / (r1 r2 c1 c2)`, the 2x2 shortcut formula.
fn shortcut(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    n * (a * d - b * c).powi(2) / ((a + b) * (c + d) * (a + c) * (b + d))
}

#[test]
fn aggregate_counts_reject_both_hypotheses() {
    let report = hypothesis_tests_from_counts(
        AggregateCounts::new(581.0, 74.0, 275.0).unwrap(),
        AggregateCounts::new(751.0, 149.0, 0.0).unwrap(),
        false,
        DEFAULT_ALPHA,
    )
    .unwrap();
    assert_eq!(report.effective, (718.5, 211.5));
    let h1 = report.h0_1;
    let h2 = report.h0_2;
    assert!((h1.statistic - shortcut(581.0, 74.0, 751.0, 149.0)).abs() <= 1e-9);
    assert!((h2.statistic - shortcut(718.5, 211.5, 751.0, 149.0)).abs() <= 1e-9);
    assert!((h1.statistic - 8.53140928828622).abs() <= 1e-9);
    assert!((h2.statistic - 11.065597381040101).abs() <= 1e-9);
    assert!((h1.p_value - 0.0034906930505051934).abs() <= 1e-12);
    assert!((h2.p_value - 0.000879442507773907).abs() <= 1e-12);
    assert!(h1.p_value < 0.01 && h1.rejected);
    assert!(h2.p_value < 0.01 && h2.rejected);
}

#[test]
fn p_value_edges() {
    assert_eq!(chi_squared_sf_1(0.0), 1.0);
    let same = chi_squared_2x2([10.0, 10.0], [10.0, 10.0], false).unwrap();
    assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
    assert!(chi_squared_2x2([0.0, 0.0], [3.0, 4.0], false).is_err());
}

#[test]
fn identical_groups_are_not_rejected() {
    let electorate = NullElectorate {
        prefer_first: vec![0.8, 0.3, 0.6, 0.9, 0.5],
        voters_per_group: 60,
        indecision_rate: 0.0,
    };
    let (ind, _) = electorate.simulate(4).unwrap();
    let strict = ResponseDataset::new(Mode::Strict, ind.records().to_vec()).unwrap();
    let report = run_hypothesis_tests(&ind, &strict, false, DEFAULT_ALPHA).unwrap();
    assert_eq!(report.h0_1.statistic, 0.0);
    assert!(!report.h0_1.rejected && !report.h0_2.rejected);
}

#[test]
fn coin_flip_indecision_is_rarely_rejected() {
    let electorate = NullElectorate {
        prefer_first: (0..15).map(|q| 0.55 + 0.025 * q as f64).collect(),
        voters_per_group: 62,
        indecision_rate: 0.25,
    };
    let rejected = (0..100)
        .filter(|&seed| {
            let (ind, strict) = electorate.simulate(seed).unwrap();
            run_hypothesis_tests(&ind, &strict, false, DEFAULT_ALPHA).unwrap().h0_2.rejected
        })
        .count();
    assert!(rejected <= 5, "H0-2 rejected in {rejected} of 100 runs");
}

#[test]
fn mismatched_question_lists_are_rejected() {
    let a = question(0, Mode::Indecisive, &[(Response::PreferFirst, 3)]);
    let b = question(1, Mode::Strict, &[(Response::PreferFirst, 3)]);
    assert!(run_hypothesis_tests(&a, &b, false, DEFAULT_ALPHA).is_err());
    assert!(run_hypothesis_tests(&b, &a, false, DEFAULT_ALPHA).is_err());
}
