import json

import pytest
from hypothesis import given, strategies as st

from cinerec.catalog import load_movie_catalog
from cinerec.errors import (
    AnchorNotFound,
    MalformedJson,
    MalformedPayload,
    MissingDataPath,
    MissingMoviesField,
    NoJsonLdBlock,
    NotAMovieBlock,
)
from cinerec.extractor import (
    InTheatersEntry,
    MovieDetailsPayload,
    TrendingSet,
    build_trending_set,
    extract_director_anchor,
    extract_jsonld_movie,
    parse_graphql_titles,
    parse_in_theaters,
    parse_movie_details,
    trending_weight,
)

from conftest import FIXTURES, GOLDEN, jsonable

HTML = FIXTURES / "html"
API = FIXTURES / "api"


def read(path):
    return path.read_text(encoding="utf-8")


def ld(doc):
    return f'<html><script type="application/ld+json">{json.dumps(doc)}</script></html>'


class TestJsonLd:
    def test_oppenheimer(self):
        movie = extract_jsonld_movie(read(HTML / "oppenheimer.html"))
        assert movie.name == "Oppenheimer"
        assert movie.directors == ("Christopher Nolan",)

    def test_two_directors_in_order(self):
        movie = extract_jsonld_movie(read(HTML / "everything_everywhere.html"))
        assert movie.directors == ("Daniel Kwan", "Daniel Scheinert")

    def test_single_director_object(self):
        movie = extract_jsonld_movie(read(HTML / "dune_part_two.html"))
        assert movie.directors == ("Denis Villeneuve",)

    def test_no_block(self):
        with pytest.raises(NoJsonLdBlock):
            extract_jsonld_movie('<html><script type="application/json">{"@type": "Movie"}</script></html>')

    def test_not_a_movie(self):
        with pytest.raises(NotAMovieBlock):
            extract_jsonld_movie(ld({"@type": "Person", "name": "x"}))

    def test_malformed_reports_position(self):
        with pytest.raises(MalformedJson) as exc:
            extract_jsonld_movie('<script type="application/ld+json">{"@type": "Movie", </script>')
        assert exc.value.position > 0

    def test_malformed_block_skipped_when_later_block_is_valid(self):
        html = '<script type="application/ld+json">{oops</script>' + ld({"@type": "Movie", "name": "Ok"})
        assert extract_jsonld_movie(html).name == "Ok"

    def test_type_list_and_director_string(self):
        movie = extract_jsonld_movie(ld({"@type": ["Thing", "Movie"], "name": "X", "director": "Some One"}))
        assert movie.directors == ("Some One",)

    def test_golden_fields(self):
        movie = extract_jsonld_movie(read(HTML / "oppenheimer.html"))
        assert jsonable(movie) == json.loads(read(GOLDEN / "oppenheimer_jsonld.json"))

    def test_to_record(self):
        rec = extract_jsonld_movie(read(HTML / "oppenheimer.html")).to_record()
        assert rec.title == "Oppenheimer" and rec.director == ("Christopher Nolan",)
        assert rec.sources == frozenset({"extracted"})


class TestAnchor:
    def test_trimmed(self):
        assert extract_director_anchor(read(HTML / "oppenheimer.html")) == "Christopher Nolan"

    def test_first_anchor_only(self):
        assert extract_director_anchor(read(HTML / "oppenheimer_rt.html")) == "Christopher Nolan"

    def test_literal(self):
        assert extract_director_anchor('<a data-qa="movie-info-director">Christopher Nolan</a>') == "Christopher Nolan"

    def test_non_anchor_element(self):
        with pytest.raises(AnchorNotFound):
            extract_director_anchor('<span data-qa="movie-info-director">Christopher Nolan</span>')

    def test_whitespace(self):
        html = '<a href="/x" data-qa="movie-info-director">\n   Greta  Gerwig \n</a>'
        assert extract_director_anchor(html) == "Greta  Gerwig"

    @pytest.mark.parametrize("page", ["oppenheimer.html", "dune_part_two.html"])
    def test_agrees_with_jsonld(self, page):
        html = read(HTML / page)
        assert extract_director_anchor(html) in extract_jsonld_movie(html).directors


class TestPayloads:
    def test_in_theaters_golden(self):
        got = parse_in_theaters(read(API / "in_theaters.json"))
        expected = json.loads(read(GOLDEN / "in_theaters.json"))
        assert {"entries": jsonable(list(got)), "skipped": got.skipped} == expected

    def test_details_golden(self):
        got = parse_movie_details(read(API / "movie_details.json"))
        expected = json.loads(read(GOLDEN / "movie_details.json"))
        assert {"movies": jsonable(list(got)), "skipped": got.skipped} == expected

    def test_graphql_golden(self):
        got = parse_graphql_titles(read(API / "graphql_titles.json"))
        expected = json.loads(read(GOLDEN / "graphql_titles.json"))
        assert {"titles": jsonable(list(got)), "skipped": got.skipped} == expected

    def test_in_theaters_order(self):
        got = parse_in_theaters('{"movies": [{"title": "Oppenheimer"}, {"title": "Barbie"}]}')
        assert [e.title for e in got] == ["Oppenheimer", "Barbie"]

    def test_empty_and_missing(self):
        assert parse_in_theaters('{"movies": []}') == []
        with pytest.raises(MissingMoviesField):
            parse_in_theaters('{"films": []}')
        with pytest.raises(MalformedPayload):
            parse_in_theaters("{not json")

    def test_details_cast_and_scores(self):
        payload = json.dumps({"movies": [{
            "title": "Oppenheimer", "abridged_cast": [{"name": "Cillian Murphy"}],
            "ratings": {"critics_score": -1, "audience_score": 88}}]})
        (d,) = parse_movie_details(payload)
        assert d.abridged_cast == ("Cillian Murphy",)
        assert d.critics_score is None and d.audience_score == 88
        assert d.critics_consensus is None

    def test_details_score_out_of_range(self):
        with pytest.raises(MalformedPayload):
            parse_movie_details('{"movies": [{"title": "x", "ratings": {"audience_score": 140}}]}')

    def test_graphql_paths(self):
        two = {"data": {"movies": {"edges": [{"node": {"title": "A", "releaseDate": "2023-01-02"}},
                                             {"node": {"title": "B"}}]}}}
        got = parse_graphql_titles(json.dumps(two))
        assert [t.title for t in got] == ["A", "B"]
        assert got[1].release_date is None
        assert parse_graphql_titles('{"data": {"movies": {"edges": []}}}') == []
        with pytest.raises(MissingDataPath) as exc:
            parse_graphql_titles('{"data": {"films": {}}}')
        assert exc.value.path == "data.movies"


class TestTrending:
    @pytest.fixture
    def catalog(self):
        return load_movie_catalog(FIXTURES / "data" / "movies.csv")

    def test_fixture_weights(self, catalog):
        entries = parse_in_theaters(read(API / "in_theaters.json"))
        details = parse_movie_details(read(API / "movie_details.json"))
        ts = build_trending_set(entries, details, catalog, now=0)
        assert ts.weight("872585") == pytest.approx(0.955, abs=1e-12)
        assert ts.unresolved == ("A Local Premiere Not In Any Catalog",)

    def test_no_details_record(self, catalog):
        ts = build_trending_set([InTheatersEntry("Barbie")], [], catalog, now=0)
        assert ts.weight("346698") == 0.5

    def test_unknown_id_weight_zero(self):
        assert TrendingSet.empty().weight("anything") == 0.0

    def test_union_and_roundtrip(self):
        a = TrendingSet({"1": 0.6, "2": 0.5}, 1.0, ("x",))
        b = TrendingSet({"1": 0.9}, 2.0)
        u = a.union(b)
        assert u.entries == {"1": 0.9, "2": 0.5}
        assert TrendingSet.from_dict(u.to_dict()) == u

    @given(st.none() | st.integers(0, 100))
    def test_weight_range(self, score):
        assert 0 < trending_weight(score) <= 1


def test_extractors_pure():
    html = read(HTML / "oppenheimer.html")
    assert extract_jsonld_movie(html) == extract_jsonld_movie(html)
    payload = read(API / "movie_details.json")
    assert parse_movie_details(payload) == parse_movie_details(payload)
    assert isinstance(parse_movie_details(payload)[0], MovieDetailsPayload)
