import numpy as np
import pytest
import scipy.integrate

from speclogic import (
    InputError,
    LorentzianAtom,
    LorentzianDictionary,
    PoleSet,
    SampledSpectrum,
    SparseSpectrum,
    TimeSeries,
    atoms_from_poles,
    eval_spectrum,
    fit_matrix_pencil,
    fit_omp,
    refine_nls,
)
from speclogic.sparse import lorentzian_model_jacobian


def damped_cosines(modes, n=600, dt=0.05):
    """Sum of a*exp(-g*t)*cos(w*t); the atom for (w, g, a) has amp a/(2g)
    for w > 0 and a/g for the zero-frequency pure decay."""
    t = np.arange(n) * dt
    x = np.zeros(n)
    for w, g, a in modes:
        x += a * np.exp(-g * t) * np.cos(w * t)
    return TimeSeries(x, dt)


def expected_amp(w, g, a):
    return a / g if w == 0 else a / (2 * g)


def test_atom_validation():
    with pytest.raises(InputError):
        LorentzianAtom(1.0, 0.0, 1.0)
    with pytest.raises(InputError):
        LorentzianAtom(1.0, 0.5, 0.0)
    with pytest.raises(InputError):
        LorentzianAtom(np.inf, 0.5, 1.0)


def test_eval_peak_and_half_maximum():
    sp = SparseSpectrum.from_atoms([LorentzianAtom(2.0, 0.5, 1.0)])
    assert eval_spectrum(sp, 2.0) == pytest.approx(1.0)
    assert eval_spectrum(sp, 2.5) == pytest.approx(0.5)
    assert eval_spectrum(sp, 1.5) == pytest.approx(0.5)


def test_eval_empty_spectrum():
    sp = SparseSpectrum.from_atoms([])
    assert eval_spectrum(sp, 3.0) == 0.0
    assert np.array_equal(eval_spectrum(sp, np.linspace(0, 1, 5)), np.zeros(5))


def test_atom_unit_mass():
    # integral of A*g^2/((w-w0)^2+g^2) over w0 +- 1e4*g is A*g*pi (nearly)
    atom = LorentzianAtom(1.3, 0.07, 2.5)
    sp = SparseSpectrum.from_atoms([atom])
    mass, _ = scipy.integrate.quad(
        lambda w: eval_spectrum(sp, w),
        atom.omega - 1e4 * atom.gamma,
        atom.omega + 1e4 * atom.gamma,
        limit=200,
    )
    assert mass == pytest.approx(atom.amp * atom.gamma * np.pi, rel=1e-3)


def test_atoms_from_poles_hand_values():
    ps = PoleSet(np.array([0.9 * np.exp(0.2j)]), np.array([1.0 + 0j]))
    sp = atoms_from_poles(ps, 0.1)
    atom = sp.atoms[0]
    assert atom.omega == pytest.approx(2.0)
    assert atom.gamma == pytest.approx(-np.log(0.9) / 0.1)  # 1.05361
    assert atom.amp == pytest.approx(1.0 / atom.gamma)


def test_atoms_from_poles_pure_decay():
    sp = atoms_from_poles(PoleSet(np.array([0.8 + 0j]), np.array([2.0 + 0j])), 1.0)
    assert sp.atoms[0].omega == 0.0
    assert sp.atoms[0].gamma == pytest.approx(-np.log(0.8))


def test_atoms_from_poles_merges_conjugates():
    z = 0.9 * np.exp(0.3j)
    ps = PoleSet(np.array([z, np.conj(z)]), np.array([0.5 + 0.1j, 0.5 - 0.1j]))
    sp = atoms_from_poles(ps, 0.1)
    assert len(sp.atoms) == 1
    assert sp.dropped == 0


def test_atoms_from_poles_drops_unstable():
    ps = PoleSet(np.array([1.2 + 0j, 0.5 + 0j]), np.array([1.0 + 0j, 1.0 + 0j]))
    sp = atoms_from_poles(ps, 1.0)
    assert len(sp.atoms) == 1
    assert sp.dropped == 1
    with pytest.raises(InputError):
        atoms_from_poles(ps, 0.0)


def test_spectrum_sorting_and_merge():
    atoms = [LorentzianAtom(3.0, 0.1, 1.0), LorentzianAtom(1.0, 0.1, 2.0)]
    sp = SparseSpectrum.from_atoms(atoms)
    assert [a.omega for a in sp.atoms] == [1.0, 3.0]
    dup = [LorentzianAtom(1.0, 0.1, 2.0), LorentzianAtom(1.0 + 1e-12, 0.1, 3.0)]
    merged = SparseSpectrum.from_atoms(dup)
    assert len(merged.atoms) == 1
    assert merged.atoms[0].amp == pytest.approx(5.0)


def test_pencil_single_damped_cosine():
    x = damped_cosines([(2.0, 0.5, 1.0)], n=100)
    sp = fit_matrix_pencil(x, 4)
    assert len(sp.atoms) == 1
    atom = sp.atoms[0]
    assert atom.omega == pytest.approx(2.0, abs=1e-6)
    assert atom.gamma == pytest.approx(0.5, abs=1e-6)
    assert atom.amp == pytest.approx(1.0, rel=1e-6)


def test_pencil_pure_decay():
    x = damped_cosines([(0.0, 0.3, 1.0)], n=100)
    sp = fit_matrix_pencil(x, 4)
    assert len(sp.atoms) == 1
    assert sp.atoms[0].omega == pytest.approx(0.0, abs=1e-9)
    assert sp.atoms[0].gamma == pytest.approx(0.3, rel=1e-8)


def test_pencil_zero_signal():
    sp = fit_matrix_pencil(TimeSeries(np.zeros(64), 0.1), 4)
    assert len(sp.atoms) == 0
    assert sp.residual_norm == 0.0


def test_pencil_too_short():
    with pytest.raises(InputError):
        fit_matrix_pencil(TimeSeries(np.ones(9), 0.1), 4)


def test_pencil_multimode_recovery():
    rng = np.random.default_rng(13)
    for _ in range(10):
        k = int(rng.integers(1, 4))
        base = [(1.2, 0.08), (3.5, 0.12), (6.0, 0.1)][:k]
        modes = [
            (w + rng.uniform(-0.1, 0.1), g * rng.uniform(0.8, 1.2), rng.uniform(0.6, 1.4))
            for w, g in base
        ]
        sp = fit_matrix_pencil(damped_cosines(modes), 2 * k)
        assert len(sp.atoms) == k
        for atom, (w, g, a) in zip(sp.atoms, sorted(modes)):
            assert atom.omega == pytest.approx(w, rel=1e-4)
            assert atom.gamma == pytest.approx(g, rel=1e-4)
            assert atom.amp == pytest.approx(expected_amp(w, g, a), rel=1e-4)


def test_pencil_agrees_with_rational_pole_path():
    # same damped cosine through the series-coefficient route: poles of
    # sum x[n] z^n are reciprocals of the sample bases
    from speclogic import extract_poles, fit_pade

    x = damped_cosines([(2.4, 0.3, 1.0)], n=200)
    pencil = fit_matrix_pencil(x, 2)
    rational = fit_pade(x.samples, 1, 2)
    ps = extract_poles(rational)
    flipped = PoleSet(1.0 / ps.poles, -ps.residues / ps.poles)
    direct = atoms_from_poles(flipped, x.dt)
    assert len(pencil.atoms) == len(direct.atoms) == 1
    a, b = pencil.atoms[0], direct.atoms[0]
    assert a.omega == pytest.approx(b.omega, rel=1e-3)
    assert a.gamma == pytest.approx(b.gamma, rel=1e-3)
    assert a.amp == pytest.approx(b.amp, rel=1e-3)


def make_target(atoms, lo=-1.0, hi=9.0, points=1200):
    grid = np.linspace(lo, hi, points)
    return SampledSpectrum(grid, eval_spectrum(SparseSpectrum.from_atoms(atoms), grid))


def test_omp_exact_single_atom():
    dictionary = LorentzianDictionary.from_ranges(0.0, 8.0, 33, 0.1, 1.6, 5)
    true_omega, true_gamma = dictionary.parameters(17)
    target = make_target([LorentzianAtom(true_omega, true_gamma, 3.0)])
    sp = fit_omp(target, dictionary, k_max=4, tol=1e-10)
    assert len(sp.atoms) == 1
    assert sp.atoms[0].omega == true_omega
    assert sp.atoms[0].gamma == true_gamma
    assert sp.atoms[0].amp == pytest.approx(3.0, abs=1e-8)
    assert sp.residual_norm <= 1e-8


def test_omp_zero_target():
    dictionary = LorentzianDictionary.from_ranges(0.0, 8.0, 9, 0.1, 1.6, 3)
    grid = np.linspace(0, 8, 200)
    sp = fit_omp(SampledSpectrum(grid, np.zeros(200)), dictionary, k_max=3)
    assert len(sp.atoms) == 0


def test_omp_two_separated_atoms_in_two_picks():
    dictionary = LorentzianDictionary(np.array([1.0, 7.0]), np.array([0.2]))
    target = make_target(
        [LorentzianAtom(1.0, 0.2, 2.0), LorentzianAtom(7.0, 0.2, 1.5)], lo=-2.0, hi=10.0
    )
    sp = fit_omp(target, dictionary, k_max=2, tol=1e-10)
    assert len(sp.atoms) == 2
    amps = sorted(a.amp for a in sp.atoms)
    assert amps == pytest.approx([1.5, 2.0], rel=1e-6)


def test_jacobian_matches_finite_differences():
    atoms = [LorentzianAtom(1.5, 0.4, 2.0), LorentzianAtom(4.0, 0.9, 0.8)]
    grid = np.linspace(-1.0, 7.0, 400)
    _, jac = lorentzian_model_jacobian(atoms, grid)
    params = np.array([p for a in atoms for p in (a.omega, a.gamma, a.amp)])

    def model(p):
        ats = [LorentzianAtom(*p[3 * i : 3 * i + 3]) for i in range(len(p) // 3)]
        out, _ = lorentzian_model_jacobian(ats, grid)
        return out

    step = 1e-6
    scale = np.max(np.abs(jac))
    for j in range(params.size):
        up, down = params.copy(), params.copy()
        up[j] += step
        down[j] -= step
        fd = (model(up) - model(down)) / (2 * step)
        denom = np.maximum(np.abs(jac[:, j]), 1e-6 * scale)
        assert np.max(np.abs(fd - jac[:, j]) / denom) <= 1e-5


def test_refine_recovers_perturbed_atoms():
    true = [LorentzianAtom(2.0, 0.3, 1.5)]
    target = make_target(true, lo=-1.0, hi=5.0)
    start = SparseSpectrum.from_atoms([LorentzianAtom(2.02, 0.297, 1.515)])
    refined = refine_nls(start, target, 50)
    atom = refined.atoms[0]
    assert atom.omega == pytest.approx(2.0, rel=1e-6)
    assert atom.gamma == pytest.approx(0.3, rel=1e-6)
    assert atom.amp == pytest.approx(1.5, rel=1e-6)


def test_refine_exact_atoms_are_fixed_point():
    true = [LorentzianAtom(2.0, 0.3, 1.5)]
    target = make_target(true, lo=-1.0, hi=5.0)
    refined = refine_nls(SparseSpectrum.from_atoms(true), target, 10)
    assert refined.converged
    assert refined.atoms[0] == true[0]


def test_refine_never_increases_residual():
    rng = np.random.default_rng(99)
    true = [LorentzianAtom(1.0, 0.25, 1.0), LorentzianAtom(3.0, 0.5, 2.0)]
    target = make_target(true, lo=-2.0, hi=6.0)
    current = SparseSpectrum.from_atoms(
        [
            LorentzianAtom(1.0 + rng.uniform(-0.2, 0.2), 0.3, 0.8),
            LorentzianAtom(3.0 + rng.uniform(-0.2, 0.2), 0.4, 2.4),
        ]
    )
    model = eval_spectrum(current, target.omega)
    last = float(np.linalg.norm(model - target.values))
    for _ in range(15):
        current = refine_nls(current, target, 1)
        assert current.residual_norm <= last + 1e-12
        last = current.residual_norm


def test_refine_requires_atoms():
    target = make_target([LorentzianAtom(1.0, 0.2, 1.0)])
    with pytest.raises(InputError):
        refine_nls(SparseSpectrum.from_atoms([]), target, 5)


def test_spectrum_serialization_roundtrip():
    sp = SparseSpectrum.from_atoms(
        [LorentzianAtom(1.0, 0.2, 1.5), LorentzianAtom(4.0, 0.6, 0.5)], residual_norm=0.25
    )
    back = SparseSpectrum.from_dict(sp.to_dict())
    assert back.atoms == sp.atoms
    assert back.residual_norm == 0.25
