//! The `verify group-theory` suite: brute-force and sampled checks of the
//! finite-group lemmas and the Lang-Trotter census identities, aggregated
//! into one pass/fail report. Any failure here is a falsification finding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::langtrotter::{
    local_factor, lt_inequality_check, subgroup_lattice, trace_count_ratio, ElementSet,
};
use crate::matgroup::{
    ball_preimage, cartan_centralizer, cartan_position, cartan_standard, check_dichotomy,
    group_closure, verify_filtration_lemma, CartanKind, CartanPosition, CartanSet,
    DichotomyOutcome, Level, MatGroup, MatGroupError, ModMatrix,
};

#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_invertible(rng: &mut ChaCha12Rng, level: Level) -> ModMatrix {
    loop {
        let m = level.modulus();
        let cand = ModMatrix::new(
            level,
            [
                rng.gen_range(0..m),
                rng.gen_range(0..m),
                rng.gen_range(0..m),
                rng.gen_range(0..m),
            ],
        );
        if cand.has_unit_det() {
            return cand;
        }
    }
}

fn random_regular_semisimple(rng: &mut ChaCha12Rng, level: Level) -> ModMatrix {
    loop {
        let cand = random_invertible(rng, level);
        if cand.is_regular_semisimple() {
            return cand;
        }
    }
}

fn push(checks: &mut Vec<VerifyCheck>, name: &str, passed: bool, detail: String) {
    checks.push(VerifyCheck {
        name: name.to_string(),
        passed,
        detail,
    });
}

/// Runs the suite at the requested prime and level exponent.
pub fn group_theory_suite(
    ell: u64,
    level_exp: u32,
    seed: u64,
) -> Result<VerifyOutcome, MatGroupError> {
    let mut checks = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // Cartan and normalizer orders match the closed formulas, by enumeration
    // of the parameter domain where it is small and by generator closure
    // otherwise.
    for n in 1..=level_exp {
        let level = Level::new(ell, n)?;
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            let cartan = cartan_standard(level, kind, None)?;
            let label = format!("{kind:?}").to_lowercase();
            if level.modulus() <= 512 {
                let mut count = 0u128;
                cartan.for_each_element(false, |_| count += 1);
                push(
                    &mut checks,
                    &format!("cartan-order-{label}-{ell}^{n}"),
                    count == cartan.order(),
                    format!("enumerated {count}, formula {}", cartan.order()),
                );
            } else {
                let full = MatGroup::CartanSub {
                    cartan: cartan.clone(),
                    set: CartanSet::FullNormalizer,
                };
                let closed = crate::matgroup::cartan_param_closure(
                    &cartan,
                    &full
                        .generators()
                        .iter()
                        .map(|g| cartan.params_of(g).expect("generators lie in C+"))
                        .collect::<Vec<_>>(),
                    1 << 22,
                )?;
                push(
                    &mut checks,
                    &format!("cartan-normalizer-order-{label}-{ell}^{n}"),
                    closed.order() == cartan.normalizer_order(),
                    format!(
                        "generator closure {}, formula {}",
                        closed.order(),
                        cartan.normalizer_order()
                    ),
                );
            }
        }
    }

    // Centralizers of regular semisimple elements are Cartan subgroups of
    // the right order, and conjugating back into the Cartan certifies
    // normalizer membership.
    {
        let n = level_exp.min(2);
        let level = Level::new(ell, n)?;
        let mut order_ok = true;
        let mut commute_ok = true;
        let mut conj_ok = true;
        let mut detail = String::from("all sampled cases agree");
        for _ in 0..24 {
            let alpha = random_regular_semisimple(&mut rng, level);
            let cartan = cartan_centralizer(&alpha)?;
            let want = match cartan.kind() {
                CartanKind::Split => (ell as u128 - 1).pow(2) * (ell as u128).pow(2 * (n - 1)),
                CartanKind::NonSplit => ((ell as u128).pow(2) - 1) * (ell as u128).pow(2 * (n - 1)),
            };
            if cartan.order() != want {
                order_ok = false;
                detail = format!("order mismatch for {alpha:?}");
            }
            // Sampled members commute with alpha.
            for _ in 0..16 {
                let m = level.modulus();
                let a = rng.gen_range(0..m);
                let b = rng.gen_range(0..m);
                let elem = cartan.element(a, b, false);
                if !elem.has_unit_det() {
                    continue;
                }
                if elem.mul(&alpha) != alpha.mul(&elem) {
                    commute_ok = false;
                    detail = format!("non-commuting member for {alpha:?}");
                }
            }
            // Conjugation criterion: g alpha g^-1 in C forces g into C+.
            for _ in 0..64 {
                let g = random_invertible(&mut rng, level);
                let gi = g.inv().unwrap();
                let conj = alpha.conjugate_by(&g, &gi);
                if cartan_position(&cartan, &conj) == CartanPosition::InCartan
                    && cartan_position(&cartan, &g) == CartanPosition::Outside
                {
                    conj_ok = false;
                    detail = format!("conjugation witness escaped C+ for {alpha:?}, g {g:?}");
                }
            }
        }
        push(&mut checks, "centralizer-order", order_ok, detail.clone());
        push(
            &mut checks,
            "centralizer-commutes",
            commute_ok,
            detail.clone(),
        );
        push(&mut checks, "conjugation-into-normalizer", conj_ok, detail);
    }

    // The non-Cartan coset of the normalizer has trace zero.
    {
        let level = Level::new(ell, level_exp)?;
        let mut ok = true;
        let mut detail = String::from("all sampled coset elements have trace 0");
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            let cartan = cartan_standard(level, kind, None)?;
            for _ in 0..128 {
                let m = level.modulus();
                let a = rng.gen_range(0..m);
                let b = rng.gen_range(0..m);
                let w = cartan.element(a, b, true);
                if !w.has_unit_det() {
                    continue;
                }
                if w.trace() != 0 {
                    ok = false;
                    detail = format!("{kind:?} coset element {w:?} has trace {}", w.trace());
                }
            }
        }
        push(&mut checks, "coset-trace-zero", ok, detail);
    }

    // Elements of C(l) whose image in PGL_2 has order above 2 are regular
    // semisimple with nonzero trace, exhaustively.
    {
        let level = Level::new(ell, 1)?;
        let mut ok = true;
        let mut detail = String::from("exhaustive over both Cartan kinds");
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            let cartan = cartan_standard(level, kind, None)?;
            cartan.for_each_element(false, |b| {
                if b.pgl_order() > 2 && (!b.is_regular_semisimple() || b.trace() == 0) {
                    ok = false;
                    detail = format!("{kind:?}: counterexample {b:?}");
                }
            });
        }
        push(&mut checks, "pgl-order-regularity", ok, detail);
    }

    // Cyclic subgroups I + l^i A with A congruent to a nonzero element of
    // the Cartan algebra, once stable under conjugation by alpha, land
    // inside the Cartan.
    if level_exp >= 2 {
        let n = level_exp.min(3);
        let level = Level::new(ell, n)?;
        let m = level.modulus();
        let mut ok = true;
        let mut tested = 0u32;
        let mut detail;
        let mut failures = String::new();
        for _ in 0..24 {
            let alpha = random_regular_semisimple(&mut rng, level);
            let cartan = cartan_centralizer(&alpha)?;
            // A = (random Cartan algebra element) + l * (random noise).
            let ca = rng.gen_range(0..m);
            let cb = rng.gen_range(0..m);
            let core = cartan.element(ca, cb, false);
            let noise = ModMatrix::new(
                level,
                [
                    ell * rng.gen_range(0..m / ell),
                    ell * rng.gen_range(0..m / ell),
                    ell * rng.gen_range(0..m / ell),
                    ell * rng.gen_range(0..m / ell),
                ],
            );
            let a_mat = core.add(&noise);
            if a_mat.reduce(1).entries() == [0, 0, 0, 0] {
                continue;
            }
            for i in 1..n {
                let li = ell.pow(i);
                let h = ModMatrix::identity(level).add(&a_mat.scale(li));
                if !h.has_unit_det() {
                    continue;
                }
                let subgroup = group_closure(&[h], 1 << 16)?;
                // The lemma's hypothesis: stability under conjugation.
                let ai = alpha.inv().unwrap();
                let conj = h.conjugate_by(&alpha, &ai);
                if !subgroup.contains(&conj) {
                    continue;
                }
                tested += 1;
                for elem in subgroup.elements() {
                    if cartan_position(&cartan, &elem) != CartanPosition::InCartan {
                        ok = false;
                        failures = format!("h {h:?} escapes the Cartan of {alpha:?}");
                    }
                }
            }
        }
        detail = format!("{tested} stable cyclic subgroups absorbed");
        if !ok {
            detail = failures;
        }
        push(&mut checks, "cyclic-absorption", ok, detail);
    }

    // Conjugation decomposition at level one and the twisted commutator span.
    if ell >= 5 {
        let level = Level::new(ell, 1)?;
        let mut ok = true;
        let mut detail = String::from("dims (1,1,2), V3 escapes the bracket, span is sl_2");
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            let cartan = cartan_standard(level, kind, None)?;
            let d = crate::matgroup::rep_decomposition(&cartan)?;
            if (d.v1.dim(), d.v2.dim(), d.v3.dim()) != (1, 1, 2) || d.v3.is_bracket_closed() {
                ok = false;
                detail = format!("{kind:?}: decomposition shape wrong");
            }
            let full = MatGroup::CartanSub {
                cartan: cartan.clone(),
                set: CartanSet::FullNormalizer,
            };
            let normalizer = full.materialize(1 << 18)?;
            // V2 and V3 are stable under conjugation by the normalizer.
            for g in normalizer.elements().iter().take(64) {
                let gi = g.inv().unwrap();
                for (name, space) in [("V2", &d.v2), ("V3", &d.v3)] {
                    for v in space.basis() {
                        let mat = ModMatrix::new(
                            level,
                            crate::matgroup::LieSubspace::coords_matrix(ell, *v),
                        );
                        let image = mat.conjugate_by(g, &gi);
                        if !space.contains_matrix(image.entries()) {
                            ok = false;
                            detail = format!("{kind:?}: {name} not stable under {g:?}");
                        }
                    }
                }
            }
            let span = crate::matgroup::twisted_commutator_span(&normalizer)?;
            if span.dim() != 3 {
                ok = false;
                detail = format!("{kind:?}: twisted span has dim {}", span.dim());
            }
        }
        push(&mut checks, "rep-decomposition", ok, detail);
    } else {
        push(
            &mut checks,
            "rep-decomposition",
            true,
            "skipped: needs l >= 5".to_string(),
        );
    }

    // Trace surjectivity along the filtration for determinant-onto groups
    // inside a Cartan normalizer (the group order is then prime to l at the
    // residue level).
    if level_exp >= 2 {
        let level = Level::new(ell, level_exp.min(3))?;
        let mut ok = true;
        let mut detail = String::from("trace onto and s_i = g_i n sl_2 on sampled groups");
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            let cartan = cartan_standard(level, kind, None)?;
            let full = MatGroup::CartanSub {
                cartan: cartan.clone(),
                set: CartanSet::FullNormalizer,
            };
            if !full.det_image_is_all_units() {
                ok = false;
                detail = format!("{kind:?}: normalizer determinant not onto");
                continue;
            }
            let table = crate::matgroup::filtration(&full)?;
            for i in 1..level.n() {
                let g = table.g(i);
                let s = table.s(i);
                if !g.trace_is_onto() {
                    ok = false;
                    detail = format!("{kind:?}: trace not onto at layer {i}");
                }
                if *s != g.intersect_sl2() {
                    ok = false;
                    detail = format!("{kind:?}: s_{i} differs from g_{i} n sl_2");
                }
            }
        }
        push(&mut checks, "filtration-trace-onto", ok, detail);
    }

    // Filtration lemma checks on structured and random groups.
    {
        let n = level_exp.max(3);
        if let Ok(level) = Level::new(ell, n) {
            if level.modulus() <= 1 << 14 {
                let mut ok = true;
                let mut detail = String::from("no filtration-lemma failure");
                let run = |group: &MatGroup, label: &str, ok: &mut bool, detail: &mut String| {
                    match verify_filtration_lemma(group, 1 << 22) {
                        Ok(report) => {
                            if !report.all_passed() {
                                *ok = false;
                                *detail = format!("{label}: {:?}", report.failures());
                            }
                        }
                        Err(e) => {
                            *ok = false;
                            *detail = format!("{label}: {e}");
                        }
                    }
                };
                // Full preimage of the residue group.
                let one = Level::new(ell, 1)?;
                let s = ModMatrix::from_signed(one, [0, -1, 1, 0]);
                let t = ModMatrix::new(one, [1, 1, 0, 1]);
                let d = ModMatrix::new(one, [2, 0, 0, 1]);
                let base = group_closure(&[s, t, d], 1 << 16)?;
                let pre = ball_preimage(base, n)?;
                run(&pre, "full-preimage", &mut ok, &mut detail);
                // Seeded random two-generator groups from ball and Cartan
                // material.
                for idx in 0..8 {
                    let gens = random_small_subgroup_generators(&mut rng, level)?;
                    let group = group_closure(&gens, 1 << 22)?;
                    run(&group, &format!("random-{idx}"), &mut ok, &mut detail);
                }
                push(&mut checks, "filtration-lemma", ok, detail);
            }
        }
    }

    // Dichotomy: structural Cartan normalizers at exponent 4n+1 and full
    // preimages must land in their respective branches, and no input meeting
    // the preconditions may violate the theorem.
    {
        let kinds: &[CartanKind] = match ell {
            3 => &[],
            5 => &[CartanKind::NonSplit],
            _ => &[CartanKind::Split, CartanKind::NonSplit],
        };
        let mut ok = true;
        let mut detail = String::from("Cartan branch for normalizers, ball branch for preimages");
        for &kind in kinds {
            let level5 = Level::new(ell, 5)?;
            let cartan = cartan_standard(level5, kind, None)?;
            let g = MatGroup::CartanSub {
                cartan,
                set: CartanSet::FullNormalizer,
            };
            match check_dichotomy(&g, 1, 1 << 22) {
                Ok(DichotomyOutcome::Cartan { .. }) => {}
                other => {
                    ok = false;
                    detail = format!("{kind:?} normalizer: {other:?}");
                }
            }
            let one = Level::new(ell, 1)?;
            let base = MatGroup::CartanSub {
                cartan: cartan_standard(one, kind, None)?,
                set: CartanSet::FullNormalizer,
            }
            .materialize(1 << 16)?;
            let pre = ball_preimage(base, 5)?;
            match check_dichotomy(&pre, 1, 1 << 22) {
                Ok(DichotomyOutcome::Ball { exponent: 4, .. }) => {}
                other => {
                    ok = false;
                    detail = format!("{kind:?} preimage: {other:?}");
                }
            }
        }
        if kinds.is_empty() {
            detail = "skipped: PGL_2 orders stay below 5 at this prime".to_string();
        }
        push(&mut checks, "dichotomy", ok, detail);
    }

    // Euler-factor census at the residue level.
    if ell <= 13 {
        let full = ElementSet::full_gl2(ell)
            .map_err(|e| MatGroupError::PreconditionFailed(format!("census setup failed: {e}")))?;
        let mut ok = true;
        let mut detail = format!("all {ell} residue classes match the census");
        for r in 0..ell as i64 {
            let ratio = trace_count_ratio(&full, r)
                .map_err(|e| MatGroupError::PreconditionFailed(format!("census failed: {e}")))?;
            if ratio.ratio != local_factor(ell, r).value {
                ok = false;
                detail = format!(
                    "r={r}: census {} vs formula {}",
                    ratio.ratio,
                    local_factor(ell, r).value
                );
            }
        }
        push(&mut checks, "euler-factor-census", ok, detail);
    }

    // Finite-level index inequality over the full subgroup lattice mod 3.
    {
        let full = ElementSet::full_gl2(3)
            .map_err(|e| MatGroupError::PreconditionFailed(format!("lattice setup failed: {e}")))?;
        let subs = subgroup_lattice(&full)
            .map_err(|e| MatGroupError::PreconditionFailed(format!("lattice failed: {e}")))?;
        let mut ok = true;
        let mut detail = format!("{} subgroups checked for every residue", subs.len());
        for sub in &subs {
            for r in 0..3 {
                match lt_inequality_check(sub, r) {
                    Ok(true) => {}
                    Ok(false) => {
                        ok = false;
                        detail = format!("inequality fails for a subgroup of order {}", sub.len());
                    }
                    Err(e) => {
                        ok = false;
                        detail = format!("inequality check error: {e}");
                    }
                }
            }
        }
        push(&mut checks, "trace-ratio-inequality", ok, detail);
    }

    Ok(VerifyOutcome { checks })
}

/// Seeded generator pairs that keep closures at a materializable size:
/// congruence-ball elements, Cartan elements, and their mixes.
pub fn random_small_subgroup_generators(
    rng: &mut ChaCha12Rng,
    level: Level,
) -> Result<Vec<ModMatrix>, MatGroupError> {
    let m = level.modulus();
    let ell = level.ell();
    let ball = |rng: &mut ChaCha12Rng| {
        ModMatrix::new(
            level,
            [
                1 + ell * rng.gen_range(0..m / ell),
                ell * rng.gen_range(0..m / ell),
                ell * rng.gen_range(0..m / ell),
                1 + ell * rng.gen_range(0..m / ell),
            ],
        )
    };
    let kind = if rng.gen_bool(0.5) {
        CartanKind::Split
    } else {
        CartanKind::NonSplit
    };
    let cartan = cartan_standard(level, kind, None)?;
    let cartan_elem = |rng: &mut ChaCha12Rng| loop {
        let a = rng.gen_range(0..m);
        let b = rng.gen_range(0..m);
        let coset = rng.gen_bool(0.25);
        let e = cartan.element(a, b, coset);
        if e.has_unit_det() {
            return e;
        }
    };
    let choice = rng.gen_range(0..3u8);
    Ok(match choice {
        0 => vec![ball(rng), ball(rng)],
        1 => vec![cartan_elem(rng), ball(rng)],
        _ => vec![cartan_elem(rng), cartan_elem(rng)],
    })
}
