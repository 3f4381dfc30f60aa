"""``cinerec`` command line.

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .catalog import Catalog, MovieRecord, load_movie_catalog, lookup_title, merge_records
from .collaborative import MatrixFactorization
from .config import AppConfig, load_config
from .content import ContentRecommender
from .errors import (
    AnchorNotFound,
    CineRecError,
    DataError,
    FileUnreadable,
    NoJsonLdBlock,
    NotAMovieBlock,
    UnknownMovie,
    UsageError,
)
from .evaluation import evaluate
from .extractor import (
    MovieDetailsPayload,
    TrendingSet,
    build_trending_set,
    extract_director_anchor,
    extract_jsonld_movie,
    parse_graphql_titles,
    parse_in_theaters,
    parse_movie_details,
)
from .fetcher import Fetcher
from .hybrid import HybridRecommender
from .persistence import loads_model, save_model
from .ratings import (
    SplitSpec,
    build_interaction_matrix,
    load_ratings,
    save_ratings,
    split_ratings,
    summarize,
)

logger = logging.getLogger("cinerec")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage().rstrip()}\n{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--data-dir", default=S, help="data directory (default $CINEREC_DATA_DIR or ./cinerec-data)")
    p.add_argument("--config", default=S, help="JSON configuration file")
    p.add_argument("--model", default=S, help="model artifact path (default <data-dir>/model.cinerec)")
    p.add_argument("--json", action="store_true", default=S, help="emit one JSON document")
    p.add_argument("--allow-network", action="store_true", default=S)
    p.add_argument("--cache-dir", default=S)
    p.add_argument("--max-age", type=float, default=S, help="ignore cache entries older than this (seconds)")
    p.add_argument("-v", "--verbose", action="store_true", default=S)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="cinerec", description="Hybrid movie recommender.", parents=[common])
    parser.add_argument("--version", action="version", version=f"cinerec {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("ingest", parents=[common], help="load catalog and ratings into the data dir")
    p.add_argument("--movies", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--links", help="CSV with movieId,tmdbId to translate rating item ids")
    p.add_argument("--out", help="output directory (default: data dir)")

    p = sub.add_parser("extract", parents=[common], help="parse saved pages / API payloads")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--html")
    src.add_argument("--api")
    src.add_argument("--dir", help="fixture directory with html/ and api/ subdirectories")
    src.add_argument("--url")
    p.add_argument("--kind", choices=["auto", "in-theaters", "details", "graphql"], default="auto")
    p.add_argument("--merge", action="store_true", help="merge into catalog and trending store")
    p.add_argument("--as-of", type=float, help="trending timestamp (epoch seconds)")

    p = sub.add_parser("train", parents=[common], help="train the latent-factor model")
    p.add_argument("--factors", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--reg", type=float)
    p.add_argument("--init-scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float)

    p = sub.add_parser("similar", parents=[common], help="content-similar movies")
    p.add_argument("--title", required=True)
    p.add_argument("--top", type=int, default=10)

    p = sub.add_parser("recommend", parents=[common], help="recommend movies for a user")
    p.add_argument("--user", required=True)
    p.add_argument("--top", type=int)
    p.add_argument("--mode", choices=["cf", "content", "hybrid"], default="hybrid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--candidates", type=int)
    p.add_argument("--require-director", help="keep only movies by this director")

    p = sub.add_parser("evaluate", parents=[common], help="held-out metrics for the trained model")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--like-threshold", type=float)

    sub.add_parser("trending", parents=[common], help="list the trending set")
    return parser


# --- helpers ---------------------------------------------------------------

def _app_config(args) -> AppConfig:
    cfg = load_config(getattr(args, "config", None))
    updates = {}
    if getattr(args, "data_dir", None):
        updates["data_dir"] = Path(args.data_dir)
    if getattr(args, "model", None):
        updates["model_path"] = Path(args.model)
    if getattr(args, "cache_dir", None):
        updates["cache_dir"] = Path(args.cache_dir)
    cfg = replace(cfg, **updates)
    fetch = replace(cfg.fetch, cache_dir=str(cfg.resolved_cache_dir),
                    allow_network=bool(getattr(args, "allow_network", False)))
    if getattr(args, "max_age", None) is not None:
        fetch = replace(fetch, max_age=args.max_age)
    return replace(cfg, fetch=fetch)


def _load_catalog(cfg: AppConfig) -> Catalog:
    if not cfg.catalog_path.exists():
        raise FileUnreadable(f"no catalog at {cfg.catalog_path}; run `cinerec ingest` first")
    return Catalog.load(cfg.catalog_path)


def _load_events(cfg: AppConfig):
    if not cfg.ratings_path.exists():
        raise FileUnreadable(f"no ratings at {cfg.ratings_path}; run `cinerec ingest` first")
    return load_ratings(cfg.ratings_path, scale=cfg.rating_scale).events


def _load_trending(cfg: AppConfig) -> TrendingSet:
    if not cfg.trending_path.exists():
        return TrendingSet.empty()
    return TrendingSet.from_dict(json.loads(cfg.trending_path.read_text(encoding="utf-8")))


def _load_model(cfg: AppConfig):
    path = cfg.resolved_model_path
    if not path.exists():
        raise FileUnreadable(f"no model at {path}; run `cinerec train` first")
    return loads_model(path.read_bytes())


def _label(rec) -> str:
    year = rec.year if rec is not None and rec.year else "n/a"
    return f"{rec.title} ({year})"


def _emit(out, args, text_lines, doc):
    if getattr(args, "json", False):
        out.write(json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    else:
        for line in text_lines:
            out.write(line + "\n")


def _table(rows: list[tuple[str, ...]]) -> list[str]:
    """Join cells with two spaces, padding every column but the last."""
    if not rows:
        return []
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) if c < len(r) - 1 else cell
                      for c, (cell, w) in enumerate(zip(r, widths))) for r in rows]


# --- commands ----------------------------------------------------------------

def cmd_ingest(args, cfg: AppConfig, out) -> int:
    target = Path(args.out) if args.out else cfg.data_dir
    target.mkdir(parents=True, exist_ok=True)
    catalog = load_movie_catalog(args.movies, cfg.movie_columns)
    id_map = None
    if args.links:
        id_map = _read_links(args.links)
    loaded = load_ratings(args.ratings, cfg.rating_columns, cfg.rating_scale, id_map)
    events = [e for e in loaded.events if e.movie_id in catalog]
    dropped = len(loaded.events) - len(events)
    if not events:
        raise DataError("no rating refers to a catalog movie")
    catalog.save(target / "catalog.json")
    save_ratings(events, target / "ratings.csv")
    s = summarize(events, loaded.summary.n_rejected)
    rep = catalog.load_report
    doc = {
        "movies": len(catalog), "movie_rows": rep.n_rows, "malformed_rows": rep.n_malformed,
        "duplicate_ids": rep.n_duplicates, "ratings": s.n_events, "users": s.n_users,
        "rated_movies": s.n_items, "rejected_ratings": s.n_rejected,
        "ratings_outside_catalog": dropped,
    }
    lines = _table([(k.replace("_", " "), str(v)) for k, v in doc.items()])
    _emit(out, args, lines, doc)
    return 0


def _read_links(path) -> dict:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return {r["movieId"]: r["tmdbId"] for r in csv.DictReader(fh) if r.get("tmdbId")}
    except (OSError, KeyError) as exc:
        raise FileUnreadable(f"cannot read links file {path}: {exc}") from exc


def _payload_kind(name: str, text: str, forced: str) -> str:
    if forced != "auto":
        return forced
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return "details"
    if isinstance(doc, dict) and "data" in doc:
        return "graphql"
    return "in-theaters" if "in_theaters" in name.replace("-", "_") else "details"


def _describe_html(name, html) -> tuple[list[str], dict, Optional[object]]:
    lines, doc, movie = [], {"source": name}, None
    try:
        movie = extract_jsonld_movie(html)
        lines.append(f"Title: {movie.name}")
        for d in movie.directors:
            lines.append(f"Director: {d}")
        if movie.date_published:
            lines.append(f"Release Date: {movie.date_published.isoformat()}")
        if movie.genres:
            lines.append(f"Genres: {', '.join(movie.genres)}")
        doc.update(name=movie.name, directors=list(movie.directors),
                   date_published=movie.date_published.isoformat() if movie.date_published else None,
                   genres=list(movie.genres) if movie.genres else None)
    except (NoJsonLdBlock, NotAMovieBlock):
        pass
    try:
        anchor = extract_director_anchor(html)
        doc["director_anchor"] = anchor
        if movie is None:
            lines.append(f"Director: {anchor}")
    except AnchorNotFound:
        if movie is None:
            raise NoJsonLdBlock(f"{name}: neither linked data nor a director anchor found")
    return lines, doc, movie


def _describe_details(films: list[MovieDetailsPayload]) -> list[str]:
    lines = []

    def opt(v):
        return "n/a" if v is None else str(v)

    for f in films:
        lines.append(f"Title: {f.title}")
        lines.append(f"Rated: {opt(f.mpaa_rating)}")
        lines.append(f"Movie Synopsis: {opt(f.synopsis)}")
        lines.append(f"Critics Consensus: {opt(f.critics_consensus)}")
        lines.append("Major Cast:")
        lines.extend(f"  {name}" for name in f.abridged_cast)
        lines.append(f"Runtime: {opt(f.runtime_minutes)}")
        lines.append(f"Critics Score: {opt(f.critics_score)}")
        lines.append(f"Audience Score: {opt(f.audience_score)}")
        lines.append(f"For more information: {opt(f.links.get('alternate'))}")
    return lines


def _details_dict(f: MovieDetailsPayload) -> dict:
    d = asdict(f)
    d["abridged_cast"] = list(f.abridged_cast)
    return d


def cmd_extract(args, cfg: AppConfig, out) -> int:
    sources: list[tuple[str, str, str]] = []  # (kind, name, text)

    def read(path):
        try:
            return Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise FileUnreadable(f"cannot read {path}: {exc}") from exc

    if args.html:
        sources.append(("html", args.html, read(args.html)))
    elif args.api:
        sources.append(("api", args.api, read(args.api)))
    elif args.dir:
        root = Path(args.dir)
        if not root.is_dir():
            raise FileUnreadable(f"{root} is not a directory")
        for p in sorted((root / "html").glob("*.htm*")):
            sources.append(("html", str(p), read(p)))
        for p in sorted((root / "api").glob("*.json")):
            sources.append(("api", str(p), read(p)))
    else:
        body = Fetcher(cfg.fetch).fetch(args.url).decode("utf-8", errors="replace")
        kind = "html" if body.lstrip()[:1] == "<" else "api"
        sources.append((kind, args.url, body))

    lines: list[str] = []
    docs = []
    updates = []  # MovieRecord updates to merge
    entries, details = [], []
    for kind, name, text in sources:
        if kind == "html":
            l, d, movie = _describe_html(name, text)
            lines += l
            docs.append(d)
            if movie is not None:
                updates.append(movie.to_record())
            continue
        pk = _payload_kind(name, text, args.kind)
        if pk == "graphql":
            titles = parse_graphql_titles(text)
            for t in titles:
                date = t.release_date.isoformat() if t.release_date else "n/a"
                lines.append(f"Title: {t.title}, Release Date: {date}")
            docs.append({"source": name, "kind": pk, "titles": [
                {"title": t.title, "release_date": t.release_date.isoformat() if t.release_date else None}
                for t in titles]})
            updates += [MovieRecord(movie_id=t.title, title=t.title, release_date=t.release_date)
                        for t in titles]
        elif pk == "in-theaters":
            ents = parse_in_theaters(text)
            films = parse_movie_details(text)
            entries += ents
            details += films
            lines += [f"Title: {e.title}" for e in ents]
            docs.append({"source": name, "kind": pk, "titles": [e.title for e in ents],
                         "skipped": ents.skipped})
        else:
            films = parse_movie_details(text)
            details += films
            updates += [f.to_record() for f in films]
            lines += _describe_details(films)
            docs.append({"source": name, "kind": pk, "movies": [_details_dict(f) for f in films],
                         "skipped": films.skipped})

    result = {"extracted": docs}
    if args.merge:
        merged = _merge(cfg, updates, entries, details, args.as_of)
        result["merge"] = merged
        lines.append(f"Merged {merged['merged']} records into the catalog "
                     f"({len(merged['unmatched'])} unmatched)")
        if entries:
            lines.append(f"Trending set: {merged['trending']} movies "
                         f"({len(merged['trending_unresolved'])} unresolved)")
    _emit(out, args, lines, result)
    return 0


def _merge(cfg: AppConfig, updates, entries, details, as_of) -> dict:
    catalog = _load_catalog(cfg)
    changed = {}
    unmatched = []
    for upd in updates:
        hits = lookup_title(catalog, upd.title)
        if not hits:
            unmatched.append(upd.title)
            continue
        base = changed.get(hits[0].movie_id, hits[0])
        changed[base.movie_id] = merge_records(base, upd)
    catalog = catalog.replace_records(changed.values())
    catalog.save(cfg.catalog_path)
    info = {"merged": len(changed), "unmatched": sorted(set(unmatched))}
    if entries:
        current = build_trending_set(entries, details, catalog, now=as_of)
        trending = _load_trending(cfg).union(current)
        cfg.trending_path.write_text(json.dumps(trending.to_dict(), sort_keys=True, indent=1),
                                     encoding="utf-8")
        info["trending"] = len(trending.entries)
        info["trending_unresolved"] = list(current.unresolved)
    return info


def cmd_train(args, cfg: AppConfig, out) -> int:
    overrides = {k: v for k, v in {
        "n_factors": args.factors, "n_epochs": args.epochs, "learning_rate": args.lr,
        "regularization": args.reg, "init_scale": args.init_scale, "seed": args.seed,
    }.items() if v is not None}
    try:
        tc = replace(cfg.train, **overrides)
        split_overrides = {}
        if args.seed is not None:
            split_overrides["seed"] = args.seed
        if args.train_fraction is not None:
            split_overrides["train_fraction"] = args.train_fraction
        split = replace(cfg.split, **split_overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    catalog = _load_catalog(cfg)
    events = _load_events(cfg)
    train, test = split_ratings(events, split)
    matrix = build_interaction_matrix(train, cfg.rating_scale)
    try:
        model = MatrixFactorization(**asdict(tc)).fit(matrix)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    vocab = ContentRecommender().fit(catalog).vocabulary_
    path = cfg.resolved_model_path
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, vocab, path, extra={"split": asdict(split)})
    doc = {
        "users": matrix.n_users, "items": matrix.n_items, "train_ratings": matrix.nnz,
        "test_ratings": len(test), "factors": tc.n_factors, "epochs": tc.n_epochs,
        "train_rmse": model.training_rmse_[-1], "model": str(path),
    }
    rows = [(k.replace("_", " "), f"{v:.4f}" if isinstance(v, float) else str(v)) for k, v in doc.items()]
    _emit(out, args, _table(rows), doc)
    return 0


def cmd_similar(args, cfg: AppConfig, out) -> int:
    catalog = _load_catalog(cfg)
    hits = lookup_title(catalog, args.title)
    if not hits:
        raise UnknownMovie(f"title {args.title!r} is not in the catalog")
    query = hits[0]
    if args.top <= 0:
        raise UsageError("--top must be positive")
    content = ContentRecommender().fit(catalog)
    ranked = content.top_k_similar(query.movie_id, args.top)
    rows = [(f"{k}.", _label(catalog[m]), f"{s:.4f}") for k, (m, s) in enumerate(ranked, 1)]
    doc = {"query": {"movie_id": query.movie_id, "title": query.title},
           "similar": [{"movie_id": m, "title": catalog[m].title, "score": s} for m, s in ranked]}
    _emit(out, args, _table(rows), doc)
    return 0


def cmd_recommend(args, cfg: AppConfig, out) -> int:
    top = args.top if args.top is not None else cfg.hybrid.n
    if top <= 0:
        raise UsageError("--top must be positive")
    catalog = _load_catalog(cfg)
    events = _load_events(cfg)
    model, vocab, _ = _load_model(cfg)
    user = args.user
    rated = {e.movie_id: e.rating for e in events if e.user_id == user}
    seen = set(rated)
    content = ContentRecommender().fit(catalog, vocabulary=vocab)
    popularity = catalog.popularity()
    director = args.require_director

    def allowed(movie_id):
        if director is None:
            return True
        rec = catalog.get(movie_id)
        return rec is not None and director.casefold() in {d.casefold() for d in rec.director}

    results = []
    if args.mode == "cf":
        if not model.knows_user(user):
            raise DataError(f"user {user!r} is unknown to the model; try --mode content")
        ranked = model.recommend(user, len(model.item_ids_), seen, popularity)
        for m, s in ranked:
            if m in catalog and allowed(m):
                results.append({"movie_id": m, "final_score": s, "components": {"cf": s}})
    elif args.mode == "content":
        profile = content.profile(rated, cfg.like_threshold)
        if len(profile) == 0:
            raise DataError(f"user {user!r} has no liked movies to build a profile from")
        for m, s in content.rank(profile, len(catalog), exclude=seen):
            if allowed(m):
                results.append({"movie_id": m, "final_score": s, "components": {"content": s}})
    else:
        try:
            hc = replace(cfg.hybrid, **{k: v for k, v in {
                "alpha": args.alpha, "beta": args.beta, "candidate_m": args.candidates}.items()
                if v is not None})
            hybrid = HybridRecommender.from_config(hc).fit(model, content.vectors_, popularity)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        profile = content.profile(rated, cfg.like_threshold)
        trending = _load_trending(cfg)
        pool = hybrid.recommend(user, profile, trending, seen, n=max(hc.candidate_m, top))
        for r in pool:
            if r.movie_id in catalog and allowed(r.movie_id):
                results.append({"movie_id": r.movie_id, "final_score": r.final_score,
                                "components": {"cf": r.cf_score_norm, "content": r.content_score,
                                               "trend": r.trending_boost}})
    results = results[:top]
    rows = []
    for k, r in enumerate(results, 1):
        rec = catalog[r["movie_id"]]
        r["title"], r["year"] = rec.title, rec.year
        parts = " ".join(f"{name}={v:.4f}" for name, v in r["components"].items())
        rows.append((f"{k}.", _label(rec), f"{r['final_score']:.4f}", f"[{parts}]"))
    _emit(out, args, _table(rows), {"user": user, "mode": args.mode, "recommendations": results})
    return 0


def cmd_evaluate(args, cfg: AppConfig, out) -> int:
    if args.k <= 0:
        raise UsageError("--k must be positive")
    catalog = _load_catalog(cfg)
    events = _load_events(cfg)
    model, _, header = _load_model(cfg)
    split = header.get("extra", {}).get("split")
    spec = SplitSpec(**split) if split else cfg.split
    train, test = split_ratings(events, spec)
    threshold = args.like_threshold if args.like_threshold is not None else cfg.like_threshold
    report = evaluate(model, train, test, catalog, k=args.k, like_threshold=threshold)
    _emit(out, args, report.format().splitlines(), report.to_dict())
    return 0


def cmd_trending(args, cfg: AppConfig, out) -> int:
    catalog = _load_catalog(cfg)
    trending = _load_trending(cfg)
    ranked = sorted(trending.entries.items(), key=lambda t: (-t[1], t[0]))
    rows = [(f"{k}.", _label(catalog.get(m)) if m in catalog else m, f"{w:.4f}")
            for k, (m, w) in enumerate(ranked, 1)]
    doc = {"as_of": trending.as_of, "trending": [
        {"movie_id": m, "title": catalog[m].title if m in catalog else None, "weight": w}
        for m, w in ranked]}
    _emit(out, args, _table(rows) or ["(trending set is empty)"], doc)
    return 0


COMMANDS = {
    "ingest": cmd_ingest, "extract": cmd_extract, "train": cmd_train, "similar": cmd_similar,
    "recommend": cmd_recommend, "evaluate": cmd_evaluate, "trending": cmd_trending,
}


def run_command(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage().rstrip())
        logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=stderr)
        cfg = _app_config(args)
        return COMMANDS[args.command](args, cfg, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return 1
    except DataError as exc:
        stderr.write(f"cinerec: {type(exc).__name__}: {exc}\n")
        return 2
    except CineRecError as exc:
        stderr.write(f"cinerec: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_command())
