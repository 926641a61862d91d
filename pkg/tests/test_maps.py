import pytest

from explab.freegroup import (
    IDENTITY,
    ReducedWord,
    concat,
    count_words,
    enumerate_words,
    invert,
    power,
    stallings_build,
)
from explab.injections import (
    FiberReport,
    MalnormalityViolated,
    conj_map,
    fiber_statistics,
    finite_image_set,
    free_injection_scan,
    injectivity_scan,
    malnormal_injection_scan,
    free_case_injection,
    malnormal_case_injection,
)

W = ReducedWord.from_str


# ----------------------------------------------------------------------
# the conjugation map on cosets
# ----------------------------------------------------------------------


def test_conj_map_examples(commutator):
    assert conj_map(commutator, IDENTITY) == commutator
    assert conj_map(commutator, commutator) == commutator
    assert conj_map(commutator, W("a")) == W("bABa")
    with pytest.raises(ValueError):
        conj_map(IDENTITY, W("a"))


def test_conj_map_coset_invariance(commutator):
    for g in enumerate_words(2, 5):
        base = conj_map(commutator, g)
        for n in range(-3, 4):
            shifted = concat(power(commutator, n), g)
            assert conj_map(commutator, shifted) == base


def test_conj_map_images_in_kernel(commutator, abelianization):
    for g in enumerate_words(2, 5):
        assert abelianization.is_kernel_member(conj_map(commutator, g))


def test_conj_map_displacement_bound(group, commutator):
    from explab.disc import displacement
    from explab.schottky import evaluate

    d_h = displacement(evaluate(group, commutator))
    for g in enumerate_words(2, 5):
        image = conj_map(commutator, g)
        d_image = displacement(evaluate(group, image))
        assert d_image <= 2 * displacement(evaluate(group, g)) + d_h + 1e-9


def test_fiber_statistics_primitive(group, commutator, abelianization):
    report = fiber_statistics(group, commutator, abelianization, 6)
    assert report.bound == 2
    assert report.max_fiber <= 2
    assert report.within_bound
    assert sum(size * n for size, n in report.histogram.items()) == report.cosets_scanned


def test_fiber_statistics_square(group, commutator, abelianization):
    h2 = concat(commutator, commutator)
    report = fiber_statistics(group, h2, abelianization, 6)
    assert report.bound == 3
    assert report.max_fiber <= 3
    # the square genuinely has two-element fibers: <root>/<h^2> cosets
    assert report.max_fiber == 2


def test_fiber_statistics_rejects_non_kernel(group, abelianization):
    with pytest.raises(ValueError):
        fiber_statistics(group, W("a"), abelianization, 4)
    with pytest.raises(ValueError):
        fiber_statistics(group, IDENTITY, abelianization, 4)


def test_fiber_report_histogram_invariant():
    with pytest.raises(ValueError):
        FiberReport(histogram={1: 3}, max_fiber=1, bound=2, cosets_scanned=5, max_length=4)


# ----------------------------------------------------------------------
# the free-case injection
# ----------------------------------------------------------------------


def test_free_case_injection_examples(commutator):
    alpha, image = free_case_injection(W("a"), commutator)
    assert str(alpha) == "a"
    assert image == W("aaabABAA")
    assert len(image) == 8

    alpha0, image0 = free_case_injection(IDENTITY, commutator)
    assert str(alpha0) == "a"
    assert image0 == W("aabABA")

    with pytest.raises(ValueError):
        free_case_injection(W("a"), commutator, k=1)
    with pytest.raises(ValueError):
        free_case_injection(W("a"), IDENTITY)


def test_free_case_injection_exclusions():
    # g ends with B -> its inverse b excluded; h0 = bab^-1: first letter b
    # excludes B... wait: excluded are {inverse of last g letter, inverse of
    # h0 first letter, h0 last letter} = {b, B, B} -> alpha = a
    h0 = W("baB")
    alpha, image = free_case_injection(W("aB"), h0)
    assert str(alpha) == "a"
    assert image == concat(concat(W("aB"), concat(concat(W("a"), h0), W("A"))), W("bA"))


def test_free_case_injection_no_cancellation_exhaustive(commutator):
    base = len(commutator) + 2
    for g in enumerate_words(2, 6):
        _, image = free_case_injection(g, commutator)
        assert len(image) == 2 * len(g) + base


def test_free_case_injection_image_in_candidate_conjugates(commutator):
    candidates = {w.codes for w in finite_image_set(commutator)}
    assert len(candidates) == 4
    for g in enumerate_words(2, 4):
        alpha, image = free_case_injection(g, commutator)
        conj = concat(concat(invert(g), image), g)
        assert conj.codes in candidates


def test_free_injection_scan_counts(commutator, abelianization):
    report = free_injection_scan(commutator, 6, abelianization)
    assert report.scanned == sum(count_words(2, l) for l in range(7))
    assert report.collisions == []
    assert report.kernel_failures == []
    assert report.length_formula_violations == 0
    assert report.max_image_length == 2 * 6 + 6
    assert report.injective_on_scan


def test_free_injection_scan_trivial_cutoff(commutator, abelianization):
    report = free_injection_scan(commutator, 0, abelianization)
    assert report.scanned == 1 and not report.collisions


def test_free_injection_scan_rejects_non_kernel_h0(abelianization):
    with pytest.raises(ValueError):
        free_injection_scan(W("ab"), 3, abelianization)


def test_injectivity_scan_flags_collisions():
    # constant map: everything collides
    report = injectivity_scan(lambda g: W("a"), 2, None)
    assert report.scanned == 17
    assert len(report.collisions) == 16
    assert not report.injective_on_scan


# ----------------------------------------------------------------------
# the malnormal-case injection
# ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def malnormal_graph():
    return stallings_build([W("abAB"), W("aaBAAb")])


def test_malnormal_case_injection_rules():
    graph = stallings_build([W("ab"), W("ba")])
    h1, h2 = graph.generators

    tau, image = malnormal_case_injection(W("ab"), graph)  # g = h1
    assert tau == h2
    assert image == concat(concat(h1, h2), invert(h1))

    # a coset representative itself: trivial H-part, tau = h1
    rep = graph.coset_canonical_rep(W("a"))
    tau2, image2 = malnormal_case_injection(rep, graph)
    assert tau2 == h1
    assert image2 == concat(concat(rep, h1), invert(rep))

    # g = rep * h2 ends in an h2 letter -> tau = h1
    g3 = concat(rep, h2)
    tau3, _ = malnormal_case_injection(g3, graph)
    assert tau3 == h1


def test_malnormal_case_injection_needs_two_generators():
    with pytest.raises(ValueError):
        malnormal_case_injection(W("a"), stallings_build([W("ab")]))


def test_malnormal_scan_rejects_bad_subgroup(abelianization):
    bad = stallings_build([W("aa"), W("bb")])
    with pytest.raises(MalnormalityViolated) as err:
        malnormal_injection_scan(bad, 4, None)
    assert err.value.pairs


def test_malnormal_scan_whole_group_vacuous():
    # H = the whole group: no g outside H, the violation scan is vacuously
    # empty and the tau rule alone keeps the map injective
    whole = stallings_build([W("a"), W("b")])
    report = malnormal_injection_scan(whole, 5, None)
    assert report.collisions == []
    assert report.injective_on_scan


def test_malnormal_scan_commutator_pair(malnormal_graph, abelianization):
    report = malnormal_injection_scan(malnormal_graph, 5, abelianization)
    assert report.scanned == sum(count_words(2, l) for l in range(6))
    assert report.collisions == []
    assert report.kernel_failures == []


def test_malnormal_images_in_kernel(malnormal_graph, abelianization):
    for g in enumerate_words(2, 4):
        _, image = malnormal_case_injection(g, malnormal_graph)
        assert abelianization.is_kernel_member(image)


def test_reports_serialize(commutator, abelianization, group):
    report = free_injection_scan(commutator, 3, abelianization)
    data = report.to_dict()
    assert data["case"] == "free" and data["scanned"] == report.scanned
    fiber = fiber_statistics(group, commutator, abelianization, 4)
    fdata = fiber.to_dict()
    assert fdata["max_fiber"] == fiber.max_fiber
    assert sum(v * int(k) for k, v in fdata["histogram"].items()) == fdata["cosets_scanned"]
