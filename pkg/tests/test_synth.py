"""Tests for the synthetic graph generator."""

import numpy as np
import pytest

from fairrank.errors import InfeasibleDegreeSequence, ParseError
from fairrank.metrics import pearson
from fairrank.synth import DegreeLaw, SynthSpec, degree_moments, generate, generate_detailed


@pytest.fixture
def spec():
    return SynthSpec(
        node_count=500,
        phi=0.3,
        in_degree_law=DegreeLaw.powerlaw(2.5, k_min=3),
        out_degree_law=DegreeLaw.poisson(6.0),
        seed=11,
    )


class TestDegreeLaw:
    """Tests for DegreeLaw parsing and sampling."""

    @pytest.mark.parametrize(
        ("text", "expected"),
        [
            ("powerlaw:2.5", DegreeLaw.powerlaw(2.5)),
            ("powerlaw:2.1:3", DegreeLaw.powerlaw(2.1, 3)),
            ("powerlaw:3:2:40", DegreeLaw.powerlaw(3.0, 2, 40)),
            ("poisson:8", DegreeLaw.poisson(8.0)),
            ("regular:4", DegreeLaw.regular(4)),
        ],
    )
    def test_parse(self, text, expected):
        assert DegreeLaw.parse(text) == expected

    def test_to_string_parses_back(self):
        law = DegreeLaw.powerlaw(2.5, 3, 100)

        assert DegreeLaw.parse(law.to_string()) == law

    @pytest.mark.parametrize("text", ["zipf:2", "poisson", "powerlaw:1.0", "regular:x"])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            DegreeLaw.parse(text)

    def test_powerlaw_respects_bounds(self):
        law = DegreeLaw.powerlaw(2.2, k_min=2, k_max=30)

        degrees = law.sample(5000, np.random.default_rng(0))

        assert degrees.min() >= 2
        assert degrees.max() <= 30

    def test_powerlaw_tail(self):
        """Test that the survival function decays with slope alpha - 1."""
        degrees = DegreeLaw.powerlaw(2.5, k_min=1).sample(200_000, np.random.default_rng(1))

        share_10 = np.mean(degrees >= 10)
        share_100 = np.mean(degrees >= 100)
        assert share_10 / share_100 == pytest.approx(10**1.5, rel=0.25)

    def test_regular(self):
        assert DegreeLaw.regular(3).sample(5, np.random.default_rng(0)).tolist() == [3] * 5

    def test_degree_cap(self):
        with pytest.raises(InfeasibleDegreeSequence):
            DegreeLaw.regular(5).sample(5, np.random.default_rng(0))


class TestSynthSpec:
    """Tests for SynthSpec parsing."""

    def test_parse_full(self):
        spec = SynthSpec.parse("n=1000,phi=0.3,in=powerlaw:2.5:3,out=poisson:8,seed=7")

        assert spec.node_count == 1000
        assert spec.phi == 0.3
        assert spec.in_degree_law == DegreeLaw.powerlaw(2.5, 3)
        assert spec.out_degree_law == DegreeLaw.poisson(8.0)
        assert spec.seed == 7

    def test_parse_defaults(self):
        spec = SynthSpec.parse("n=50")

        assert spec == SynthSpec(node_count=50)

    def test_round_trip(self):
        text = "n=100,phi=0.25,in=regular:3,out=regular:3,seed=2"

        assert SynthSpec.parse(text).to_string() == text

    @pytest.mark.parametrize("text", ["phi=0.3", "n=10,colour=red", "n=ten", "n=10,phi=2"])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            SynthSpec.parse(text)


class TestGenerate:
    """Tests for graph generation."""

    def test_simple_graph(self, spec):
        g, groups = generate(spec)

        edges = g.edge_array()
        assert np.all(edges[:, 0] != edges[:, 1])
        assert len({tuple(e) for e in edges.tolist()}) == g.edge_count
        assert groups.protected_count == 150
        assert g.node_count == 500

    def test_same_seed_same_graph(self, spec):
        first, first_groups = generate(spec)
        second, second_groups = generate(spec)

        assert first.fingerprint == second.fingerprint
        assert first_groups.as_int().tolist() == second_groups.as_int().tolist()

    def test_different_seed_different_graph(self, spec):
        other = SynthSpec(
            node_count=spec.node_count,
            phi=spec.phi,
            in_degree_law=spec.in_degree_law,
            out_degree_law=spec.out_degree_law,
            seed=spec.seed + 1,
        )

        assert generate(spec)[0].fingerprint != generate(other)[0].fingerprint

    def test_regular_graph_keeps_degrees(self):
        spec = SynthSpec(
            node_count=200,
            in_degree_law=DegreeLaw.regular(4),
            out_degree_law=DegreeLaw.regular(4),
        )

        result = generate_detailed(spec)

        assert result.graph.in_degree.tolist() == [4] * 200
        assert result.graph.out_degree.tolist() == [4] * 200
        assert result.metadata["repaired_stubs"] == 0

    def test_metadata(self, spec):
        result = generate_detailed(spec)

        assert result.metadata["spec"] == spec.to_string()
        assert result.metadata["edge_count"] == result.graph.edge_count
        assert result.metadata["protected_count"] == 150
        assert result.metadata["repaired_side"] in ("none", "in", "out")

    def test_degrees_are_uncorrelated(self):
        g, groups = generate(
            SynthSpec(node_count=20_000, phi=0.3, in_degree_law=DegreeLaw.powerlaw(2.5), seed=2)
        )
        k_in = g.in_degree
        predecessor_k_out = np.bincount(
            g.targets, weights=g.out_degree[g.sources], minlength=g.node_count
        )
        reached = k_in > 0

        assert abs(pearson(k_in[reached], predecessor_k_out[reached] / k_in[reached])) <= 0.05
        assert abs(pearson(k_in, groups.as_int())) <= 0.05

    def test_degree_at_least_n_is_rejected(self):
        spec = SynthSpec(node_count=4, in_degree_law=DegreeLaw.regular(4))

        with pytest.raises(InfeasibleDegreeSequence):
            generate(spec)

    def test_moments(self):
        g, _ = generate(
            SynthSpec(
                node_count=100,
                in_degree_law=DegreeLaw.regular(3),
                out_degree_law=DegreeLaw.regular(3),
            )
        )

        moments = degree_moments(g)

        assert moments.mean_in_degree == 3.0
        assert moments.in_sq_over_out == pytest.approx(3.0)
        assert moments.max_in_degree == 3
