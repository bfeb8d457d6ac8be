use super::cartan::{
    cartan_centralizer, cartan_position, find_cartan_normalizer, CartanPosition, CartanSubgroup,
};
use super::group::contains_ball;
use super::lie::filtration;
use super::{commutator_subgroup, MatGroup, MatGroupError, ModMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BallEvidence {
    /// The group is a full preimage whose base level already sits at or
    /// below the required exponent.
    StructuralPreimage,
    /// Ball membership was checked element by element.
    Enumerated,
}

/// Outcome of the dichotomy decision: the level-n image lies in a Cartan
/// normalizer, or the group contains the full congruence ball at exponent 4n.
#[derive(Clone, Debug)]
pub enum DichotomyOutcome {
    Cartan {
        cartan: Box<CartanSubgroup>,
        witness: Option<ModMatrix>,
    },
    Ball {
        exponent: u32,
        evidence: BallEvidence,
    },
}

/// Whether a materialized group at level (l, 1) is contained in a Cartan
/// subgroup. Decidable outright: scalars lie in every Cartan; a regular
/// semisimple element pins down the only possible Cartan; and a non-scalar
/// group without regular semisimple elements fits in none, because every
/// non-scalar element of a level-one Cartan is regular semisimple.
fn inside_some_cartan_level1(group: &MatGroup) -> Result<bool, MatGroupError> {
    let elems = group.elements();
    if elems.iter().all(|m| m.is_scalar()) {
        return Ok(true);
    }
    match elems.iter().find(|m| m.is_regular_semisimple()) {
        Some(alpha) => {
            let cartan = cartan_centralizer(alpha)?;
            Ok(elems
                .iter()
                .all(|m| cartan_position(&cartan, m) == CartanPosition::InCartan))
        }
        None => Ok(false),
    }
}

fn max_pgl_order_level1(group: &MatGroup) -> u64 {
    group
        .elements()
        .iter()
        .map(|m| m.pgl_order())
        .max()
        .unwrap_or(1)
}

/// Decides, for a group G given at level l^m with m >= 4n + 1, which branch
/// of the Cartan-or-ball dichotomy holds at level l^n: either G(l^n) lies in
/// the normalizer of a Cartan subgroup, or G contains every matrix congruent
/// to I modulo l^{4n}.
///
/// Preconditions (checked, reported via `PreconditionFailed`):
/// - det(G) is all of (Z/l^m)^*,
/// - G(l) lies in some Cartan normalizer but in no Cartan,
/// - the image of G(l) in PGL_2 has an element of order at least 5.
pub fn check_dichotomy(
    group: &MatGroup,
    n: u32,
    cap: usize,
) -> Result<DichotomyOutcome, MatGroupError> {
    let level = group.level();
    let m = level.n();
    if m < 4 * n + 1 {
        return Err(MatGroupError::PreconditionFailed(format!(
            "level exponent {m} is below 4n+1 = {}",
            4 * n + 1
        )));
    }
    if !group.det_image_is_all_units() {
        return Err(MatGroupError::PreconditionFailed(
            "determinant image is not all units".into(),
        ));
    }
    let g1 = group.reduce(1).materialize(cap)?;
    let in_normalizer = match find_cartan_normalizer(&g1) {
        Ok(found) => found.is_some(),
        Err(MatGroupError::Inconclusive(_)) => false,
        Err(e) => return Err(e),
    };
    if !in_normalizer {
        return Err(MatGroupError::PreconditionFailed(
            "mod-l image is not contained in any Cartan normalizer".into(),
        ));
    }
    if inside_some_cartan_level1(&g1)? {
        return Err(MatGroupError::PreconditionFailed(
            "mod-l image is contained in a Cartan subgroup".into(),
        ));
    }
    let pgl = max_pgl_order_level1(&g1);
    if pgl < 5 {
        return Err(MatGroupError::PreconditionFailed(format!(
            "mod-l image has PGL_2 element orders at most {pgl} < 5"
        )));
    }

    // Structural fast path: a full preimage at base level k <= 4n certifies
    // the ball branch outright.
    if let MatGroup::BallPreimage { base, .. } = group {
        if base.level().n() <= 4 * n {
            return Ok(DichotomyOutcome::Ball {
                exponent: 4 * n,
                evidence: BallEvidence::StructuralPreimage,
            });
        }
    }

    let gn = group.reduce(n);
    match find_cartan_normalizer(&gn) {
        Ok(Some(found)) => {
            return Ok(DichotomyOutcome::Cartan {
                cartan: Box::new(found.cartan),
                witness: found.witness,
            })
        }
        Ok(None) | Err(MatGroupError::Inconclusive(_)) => {}
        Err(e) => return Err(e),
    }
    if contains_ball(group, 4 * n) {
        return Ok(DichotomyOutcome::Ball {
            exponent: 4 * n,
            evidence: BallEvidence::Enumerated,
        });
    }
    Err(MatGroupError::TheoremViolation(format!(
        "group of order {} at level {:?}: no Cartan normalizer contains the level-{} image \
         and the ball at exponent {} is not contained",
        group.order(),
        level,
        n,
        4 * n
    )))
}

#[derive(Clone, Debug)]
pub struct FiltrationCheck {
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct FiltrationLemmaReport {
    pub checks: Vec<FiltrationCheck>,
}

impl FiltrationLemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.applicable)
    }

    pub fn failures(&self) -> Vec<&FiltrationCheck> {
        self.checks
            .iter()
            .filter(|c| c.applicable && !c.passed)
            .collect()
    }
}

fn order_at(group: &MatGroup, j: u32) -> u128 {
    group.reduce(j).order()
}

/// Counts elements of `group` congruent to I modulo l^e with determinant
/// exactly one at the group's level.
fn count_sl_ball_elements(group: &MatGroup, e: u32, cap: usize) -> Result<u128, MatGroupError> {
    let level = group.level();
    let ell = level.ell();
    let le = ell.pow(e);
    let mat = group.materialize(cap)?;
    let mut count = 0u128;
    for m in mat.elements() {
        let en = m.entries();
        let modl = level.modulus();
        let off = [
            crate::arith::submod(en[0], 1, modl),
            en[1],
            en[2],
            crate::arith::submod(en[3], 1, modl),
        ];
        if off.iter().all(|&x| x % le == 0) && m.det() == 1 {
            count += 1;
        }
    }
    Ok(count)
}

/// Finite-level verification of the basic filtration facts for a group at
/// level l^m, m >= 3:
///
/// (i)   g_i is contained in g_{i+1} for 1 <= i <= m-2;
/// (ii') if g_i = gl_2 then |G(l^j)| = |G(l^i)| l^{4(j-i)} for i <= j <= m;
/// (iv') if g_i = g_{2i} (with 2i <= m-1) then g_i is bracket-closed;
/// (v')  if G(l^{i+1}) contains the determinant-one ball at exponent i then
///       [G, G] contains the SL_2 ball at exponent 2i + e (e = 0 for odd l,
///       1 for l = 2; the level machinery only admits odd l), for 2i + e < m.
pub fn verify_filtration_lemma(
    group: &MatGroup,
    cap: usize,
) -> Result<FiltrationLemmaReport, MatGroupError> {
    let level = group.level();
    let m = level.n();
    if m < 3 {
        return Err(MatGroupError::PreconditionFailed(
            "filtration lemma checks need level exponent >= 3".into(),
        ));
    }
    let ell = level.ell();
    let e_shift = if ell == 2 { 1 } else { 0 };
    let table = filtration(group)?;
    let mut checks = Vec::new();

    for i in 1..=m - 2 {
        let ok = table.g(i + 1).contains_subspace(table.g(i));
        checks.push(FiltrationCheck {
            name: format!("(i) g_{i} within g_{}", i + 1),
            applicable: true,
            passed: ok,
            detail: format!(
                "dim g_{i} = {}, dim g_{} = {}",
                table.g(i).dim(),
                i + 1,
                table.g(i + 1).dim()
            ),
        });
    }

    let orders: Vec<u128> = (1..=m).map(|j| order_at(group, j)).collect();
    for i in 1..=m - 1 {
        let applicable = table.g(i).dim() == 4;
        let mut passed = true;
        let mut detail = String::from("g_i is not all of gl_2");
        if applicable {
            detail = String::new();
            for j in i..=m {
                let want = orders[i as usize - 1] * (ell as u128).pow(4 * (j - i));
                let got = orders[j as usize - 1];
                if got != want {
                    passed = false;
                    detail = format!("|G(l^{j})| = {got}, expected {want}");
                    break;
                }
            }
            if passed {
                detail = format!("orders grow by l^4 from level {i} to {m}");
            }
        }
        checks.push(FiltrationCheck {
            name: format!("(ii') full layer at {i} forces ball-sized growth"),
            applicable,
            passed,
            detail,
        });
    }

    for i in 1..=m - 1 {
        if 2 * i > m - 1 {
            break;
        }
        let applicable = table.g(i) == table.g(2 * i);
        let passed = !applicable || table.g(i).is_bracket_closed();
        checks.push(FiltrationCheck {
            name: format!("(iv') g_{i} = g_{} is a Lie subalgebra", 2 * i),
            applicable,
            passed,
            detail: format!("dim g_{i} = {}", table.g(i).dim()),
        });
    }

    let mut commutator: Option<MatGroup> = None;
    for i in 1..=m - 1 {
        let target = 2 * i + e_shift;
        if target >= m {
            break;
        }
        // Premise: the determinant-one ball at exponent i lies in G(l^{i+1}).
        let g_next = group.reduce(i + 1);
        let premise_count = count_sl_ball_elements(&g_next, i, cap)?;
        let premise = premise_count == (ell as u128).pow(3);
        let mut passed = true;
        let mut detail = format!(
            "premise fails: only {premise_count} of {} ball elements",
            ell.pow(3)
        );
        if premise {
            if commutator.is_none() {
                commutator = Some(commutator_subgroup(group, cap)?);
            }
            let k = commutator.as_ref().unwrap();
            let got = count_sl_ball_elements(k, target, cap)?;
            let want = (ell as u128).pow(3 * (m - target));
            passed = got == want;
            detail = format!("[G,G] holds {got} of {want} SL_2-ball elements at exponent {target}");
        }
        checks.push(FiltrationCheck {
            name: format!(
                "(v') ball at {i} in G(l^{}) puts SL_2-ball at {target} in [G,G]",
                i + 1
            ),
            applicable: premise,
            passed,
            detail,
        });
    }

    Ok(FiltrationLemmaReport { checks })
}

#[cfg(test)]
mod tests {
    use super::super::cartan::{cartan_standard, CartanKind, CartanSet};
    use super::super::group::{ball_preimage, group_closure};
    use super::super::Level;
    use super::*;

    fn lv(ell: u64, n: u32) -> Level {
        Level::new(ell, n).unwrap()
    }

    fn full_normalizer(ell: u64, n: u32, kind: CartanKind) -> MatGroup {
        let cartan = cartan_standard(lv(ell, n), kind, None).unwrap();
        MatGroup::CartanSub {
            cartan,
            set: CartanSet::FullNormalizer,
        }
    }

    #[test]
    fn dichotomy_cartan_branch_nonsplit_5() {
        let g = full_normalizer(5, 5, CartanKind::NonSplit);
        match check_dichotomy(&g, 1, 1 << 20).unwrap() {
            DichotomyOutcome::Cartan { .. } => {}
            other => panic!("expected Cartan branch, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_cartan_branch_split_7() {
        let g = full_normalizer(7, 5, CartanKind::Split);
        match check_dichotomy(&g, 1, 1 << 20).unwrap() {
            DichotomyOutcome::Cartan { .. } => {}
            other => panic!("expected Cartan branch, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_ball_branch_for_preimage() {
        let base = full_normalizer(5, 1, CartanKind::NonSplit)
            .materialize(1 << 10)
            .unwrap();
        let g = ball_preimage(base, 5).unwrap();
        match check_dichotomy(&g, 1, 1 << 20).unwrap() {
            DichotomyOutcome::Ball {
                exponent: 4,
                evidence,
            } => {
                assert_eq!(evidence, BallEvidence::StructuralPreimage);
            }
            other => panic!("expected Ball branch, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_rejects_split_5() {
        // The split Cartan mod 5 has PGL_2 element orders at most 4.
        let g = full_normalizer(5, 5, CartanKind::Split);
        match check_dichotomy(&g, 1, 1 << 20) {
            Err(MatGroupError::PreconditionFailed(msg)) => {
                assert!(msg.contains("PGL_2"), "{msg}");
            }
            other => panic!("expected precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn dichotomy_rejects_low_level() {
        let g = full_normalizer(5, 3, CartanKind::NonSplit);
        assert!(matches!(
            check_dichotomy(&g, 1, 1 << 20),
            Err(MatGroupError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn filtration_lemma_on_full_gl2_mod27() {
        let l = lv(3, 3);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 20).unwrap();
        assert_eq!(g.order(), l.gl2_order());
        let report = verify_filtration_lemma(&g, 1 << 20).unwrap();
        assert!(report.all_passed(), "failures: {:?}", report.failures());
        // The (v') check must actually have fired at i = 1.
        assert!(report
            .checks
            .iter()
            .any(|c| c.name.starts_with("(v')") && c.applicable && c.passed));
    }

    #[test]
    fn filtration_lemma_on_scalar_group_mod27() {
        let l = lv(3, 3);
        let g = group_closure(
            &[
                ModMatrix::new(l, [4, 0, 0, 4]),
                ModMatrix::new(l, [2, 0, 0, 2]),
            ],
            1 << 12,
        )
        .unwrap();
        let report = verify_filtration_lemma(&g, 1 << 12).unwrap();
        assert!(report.all_passed(), "failures: {:?}", report.failures());
    }
}
