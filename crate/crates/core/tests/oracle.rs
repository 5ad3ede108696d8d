//! Dense brute-force reference computations, written without the crate's
//! measurement or correction code, compared against the library.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64 as C;
use qutrit_chain::analysis::{class_probabilities, p_gctp4, p_pgctp, p_sctp, p_single};
use qutrit_chain::corrections::correction_unitary;
use qutrit_chain::protocols::{enumerate, ProtocolSpec};
use qutrit_chain::qutrit::{
    apply_operator, haar_random_state, make_channel, random_channel, random_state, ChannelCoeffs,
    PureState, QutritOperator,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn omega(k: usize) -> C {
    C::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % 3) as f64 / 3.0)
}

/// `⟨j k|Φ_mn⟩`.
fn bell(m: usize, n: usize, j: usize, k: usize) -> C {
    if k == (j + m) % 3 {
        omega(j * n) / 3f64.sqrt()
    } else {
        C::new(0.0, 0.0)
    }
}

fn kron(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![C::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn dense(op: &QutritOperator) -> Vec<Vec<C>> {
    (0..3)
        .map(|r| (0..3).map(|c| op.get(r, c)).collect())
        .collect()
}

#[test]
fn single_qutrit_operator_matches_full_register_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = random_state(&mut rng);
    let b = random_state(&mut rng);
    let c = random_state(&mut rng);
    let mut amps = Vec::with_capacity(27);
    for x in a.amplitudes() {
        for y in b.amplitudes() {
            for z in c.amplitudes() {
                amps.push(x * y * z);
            }
        }
    }
    let register = PureState::from_amplitudes(3, amps.clone()).unwrap();
    let id = dense(&QutritOperator::identity());
    for (m, n) in [(1, 0), (2, 1), (0, 2)] {
        let u = correction_unitary(m, n);
        let ud = dense(&u);
        for target in 0..3 {
            let factors: Vec<&Vec<Vec<C>>> = (0..3)
                .map(|q| if q == target { &ud } else { &id })
                .collect();
            let full = kron(&kron(factors[0], factors[1]), factors[2]);
            let expected: Vec<C> = full
                .iter()
                .map(|row| row.iter().zip(&amps).map(|(x, y)| x * y).sum())
                .collect();
            let got = apply_operator(&u, &register, target).unwrap();
            let diff = got
                .amplitudes()
                .iter()
                .zip(&expected)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "U_{m}{n} on qutrit {target}: {diff}");
        }
    }
}

type Matrix3 = [[C; 3]; 3];
type History = Vec<(usize, usize)>;

/// Linear map from the input qutrit to the final party's qutrit for every
/// GBM history of a `hops`-hop chain, with all measurements done at once.
fn history_maps(channel: &ChannelCoeffs, hops: usize) -> Vec<(History, Matrix3)> {
    let a = channel.as_array();
    let histories: Vec<History> = (0..9usize.pow(hops as u32))
        .map(|mut h| {
            let mut v = Vec::with_capacity(hops);
            for _ in 0..hops {
                v.push(((h % 9) / 3, h % 3));
                h /= 9;
            }
            v.reverse();
            v
        })
        .collect();
    histories
        .into_iter()
        .map(|hist| {
            let mut map = [[C::new(0.0, 0.0); 3]; 3];
            // measured trits: input, then (left, right) for each channel except the last right
            let measured = 2 * hops;
            for input in 0..3 {
                for out in 0..3 {
                    let mut acc = C::new(0.0, 0.0);
                    for idx in 0..3usize.pow(measured as u32) {
                        let mut t = vec![0usize; measured];
                        let mut r = idx;
                        for slot in t.iter_mut().rev() {
                            *slot = r % 3;
                            r /= 3;
                        }
                        if t[0] != input {
                            continue;
                        }
                        // channel h holds trits (t[2h+1], next); Schmidt form a_k |k k⟩
                        let mut amp = C::new(1.0, 0.0);
                        for h in 0..hops {
                            let left = t[2 * h + 1];
                            let right = if h + 1 < hops { t[2 * h + 2] } else { out };
                            if left != right {
                                amp = C::new(0.0, 0.0);
                                break;
                            }
                            amp *= a[left];
                        }
                        if amp == C::new(0.0, 0.0) {
                            continue;
                        }
                        for (h, &(m, n)) in hist.iter().enumerate() {
                            amp *= bell(m, n, t[2 * h], t[2 * h + 1]).conj();
                        }
                        acc += amp;
                    }
                    map[out][input] = acc;
                }
            }
            (hist, map)
        })
        .collect()
}

/// Best unambiguous success probability for a residual map `M`: the smallest
/// eigenvalue of `M†M`, which is diagonal for every GBM history.
fn best_success(map: &Matrix3) -> f64 {
    let mut gram = [[C::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            gram[i][j] = (0..3).map(|k| map[k][i].conj() * map[k][j]).sum();
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(gram[i][j].norm() < 1e-13, "residual map is not monomial");
            }
        }
    }
    (0..3).map(|i| gram[i][i].re).fold(f64::INFINITY, f64::min)
}

#[test]
fn single_hop_oracle_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let ch = random_channel(&mut rng);
        let maps = history_maps(&ch, 1);
        let total: f64 = maps.iter().map(|(_, m)| best_success(m)).sum();
        assert!((total - p_single(&ch)).abs() < 1e-12);
        // input |i⟩ reaches outcome (m, n) with probability a_{i+m}^2 / 3 for every n
        for (hist, map) in &maps {
            let (m, _) = hist[0];
            for i in 0..3 {
                let column: f64 = (0..3).map(|k| map[k][i].norm_sqr()).sum();
                assert!((column - ch.coeff(i + m).powi(2) / 3.0).abs() < 1e-12);
            }
        }
    }
}

fn class_of(ms: [usize; 3]) -> usize {
    let mut s = ms;
    s.sort_unstable();
    if s[0] == s[2] {
        return 1 + s[0];
    }
    if s[0] != s[1] && s[1] != s[2] {
        return 10;
    }
    let doubled = if s[0] == s[1] { s[0] } else { s[2] };
    let single = if s[0] == s[1] { s[2] } else { s[0] };
    if single == (doubled + 1) % 3 {
        4 + doubled
    } else {
        7 + doubled
    }
}

#[test]
fn three_hop_oracle_matches_gctp4_closed_form_and_class_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut channels = vec![make_channel(0.5, 0.6, 0.39f64.sqrt()).unwrap()];
    channels.extend((0..9).map(|_| random_channel(&mut rng)));
    for ch in channels {
        let maps = history_maps(&ch, 3);
        let total: f64 = maps.iter().map(|(_, m)| best_success(m)).sum();
        assert!(
            (total - p_gctp4(&ch)).abs() < 1e-12,
            "{ch:?}: oracle {total} vs {}",
            p_gctp4(&ch)
        );

        let psi = random_state(&mut rng);
        let c = psi.amplitudes();
        let mut per_class = [0.0; 11];
        for (hist, map) in &maps {
            let out: f64 = (0..3)
                .map(|k| (0..3).map(|i| map[k][i] * c[i]).sum::<C>().norm_sqr())
                .sum();
            // no corrections between hops here, so hop k sees the accumulated shift
            let shifts = [
                hist[0].0,
                hist[0].0 + hist[1].0,
                hist[0].0 + hist[1].0 + hist[2].0,
            ];
            per_class[class_of(shifts.map(|s| s % 3))] += out;
        }
        for (class, p) in class_probabilities(&ch, &psi) {
            let expected = per_class[class.index() as usize];
            assert!(
                (p - expected).abs() < 1e-12,
                "class {class}: {p} vs {expected}"
            );
        }
    }
}

#[test]
fn enumeration_matches_closed_forms_over_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let ch = random_channel(&mut rng);
        let psi = haar_random_state(i);
        for steps in 1..=4 {
            let d = enumerate(&ProtocolSpec::sctp(steps).unwrap(), &psi, &ch).unwrap();
            assert!((d.total_success_probability - p_sctp(&ch, steps)).abs() <= 1e-10);
        }
        let g = enumerate(&ProtocolSpec::gctp4(), &psi, &ch).unwrap();
        assert!((g.total_success_probability - p_gctp4(&ch)).abs() <= 1e-10);
        for segments in 1..=2 {
            let d = enumerate(&ProtocolSpec::pgctp(segments).unwrap(), &psi, &ch).unwrap();
            assert!((d.total_success_probability - p_pgctp(&ch, segments)).abs() <= 1e-10);
        }
    }
}
