"""Regenerate fixtures/data/movies.csv and fixtures/data/ratings.csv.

The catalog rows are hand-written in the TMDB 2023 export layout (with a
deliberate duplicate id and one untitled row). Ratings are drawn from a
seeded latent-taste model so that collaborative signal exists.
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "data"

HEADER = ["id", "title", "vote_average", "vote_count", "status", "release_date", "runtime",
          "imdb_id", "original_language", "overview", "popularity", "genres", "keywords"]

# id, title, date, genres, keywords, popularity, vote_average, vote_count, runtime, overview
MOVIES = [
    ("872585", "Oppenheimer", "2023-07-19", "Drama, History", "biography, atomic bomb, physicist, world war ii, based on novel or book", 215.4, 8.1, 7412, 181, "The story of J. Robert Oppenheimer and his role in the development of the atomic bomb."),
    ("346698", "Barbie", "2023-07-19", "Comedy, Adventure, Fantasy", "doll, fantasy world, feminism, based on toy", 198.2, 7.1, 8120, 114, "Barbie and Ken leave Barbie Land for the real world."),
    ("693134", "Dune: Part Two", "2024-02-27", "Science Fiction, Adventure", "desert, prophecy, based on novel or book, sequel, epic", 310.8, 8.2, 5200, 167, "Paul Atreides unites with the Fremen on a path of revenge."),
    ("438631", "Dune", "2021-09-15", "Science Fiction, Adventure", "desert, prophecy, based on novel or book, epic", 120.5, 7.8, 11500, 155, "A gifted young man travels to the most dangerous planet in the universe."),
    ("27205", "Inception", "2010-07-15", "Action, Science Fiction, Adventure", "dream, subconscious, heist, mind bending", 95.1, 8.4, 35000, 148, "A thief who steals secrets through dream-sharing technology."),
    ("157336", "Interstellar", "2014-11-05", "Adventure, Drama, Science Fiction", "space travel, black hole, time dilation, father daughter relationship", 140.2, 8.4, 33000, 169, "Explorers travel through a wormhole in search of a new home."),
    ("155", "The Dark Knight", "2008-07-16", "Drama, Action, Crime, Thriller", "dc comics, joker, vigilante, crime fighter", 88.3, 8.5, 31000, 152, "Batman faces the Joker in Gotham City."),
    ("49026", "The Dark Knight Rises", "2012-07-17", "Action, Crime, Drama, Thriller", "dc comics, vigilante, sequel", 60.2, 7.8, 21500, 165, "Batman returns to defend Gotham from Bane."),
    ("272", "Batman Begins", "2005-06-10", "Action, Crime, Drama", "dc comics, vigilante, origin story", 45.7, 7.7, 20000, 140, "Bruce Wayne becomes the Batman."),
    ("1124", "The Prestige", "2006-10-17", "Drama, Mystery, Science Fiction", "magician, rivalry, obsession, based on novel or book", 40.1, 8.2, 15000, 130, "Two stage magicians engage in a bitter rivalry."),
    ("77", "Memento", "2000-10-11", "Mystery, Thriller", "amnesia, nonlinear timeline, revenge", 30.4, 8.2, 14000, 113, "A man with short-term memory loss hunts his wife's killer."),
    ("374720", "Dunkirk", "2017-07-19", "War, Action, Drama", "world war ii, evacuation, survival", 35.9, 7.5, 16000, 107, "Allied soldiers are evacuated from Dunkirk."),
    ("577922", "Tenet", "2020-08-22", "Action, Thriller, Science Fiction", "time travel, espionage, heist", 50.3, 7.2, 9800, 150, "A secret agent manipulates the flow of time."),
    ("603", "The Matrix", "1999-03-30", "Action, Science Fiction", "simulated reality, hacker, dystopia", 70.6, 8.2, 24000, 136, "A hacker learns the truth about his reality."),
    ("335984", "Blade Runner 2049", "2017-10-04", "Science Fiction, Drama", "dystopia, android, sequel", 55.0, 7.5, 13000, 164, "A new blade runner unearths a long-buried secret."),
    ("78", "Blade Runner", "1982-06-25", "Science Fiction, Drama, Thriller", "android, dystopia, neo-noir", 40.2, 7.9, 13500, 117, "A blade runner hunts replicants in Los Angeles."),
    ("329865", "Arrival", "2016-11-10", "Drama, Science Fiction, Mystery", "alien, linguistics, first contact, based on novel or book", 38.8, 7.6, 17500, 116, "A linguist works to communicate with alien visitors."),
    ("286217", "The Martian", "2015-09-30", "Drama, Adventure, Science Fiction", "mars, survival, space travel, based on novel or book", 45.3, 7.7, 19800, 144, "An astronaut is stranded on Mars."),
    ("49047", "Gravity", "2013-09-27", "Science Fiction, Thriller, Drama", "space, survival, astronaut", 30.9, 7.2, 14500, 91, "Two astronauts are stranded after debris destroys their shuttle."),
    ("545611", "Everything Everywhere All at Once", "2022-03-24", "Action, Adventure, Science Fiction", "multiverse, mother daughter relationship, family", 60.7, 7.8, 6100, 140, "A laundromat owner is swept into a multiverse adventure."),
    ("466420", "Killers of the Flower Moon", "2023-10-18", "Crime, History, Drama", "based on true story, murder, oil", 90.1, 7.5, 2600, 206, "Members of the Osage Nation are murdered under mysterious circumstances."),
    ("424", "Schindler's List", "1993-12-15", "Drama, History, War", "holocaust, world war ii, based on true story, biography", 55.2, 8.6, 15000, 195, "A businessman saves over a thousand Jewish refugees."),
    ("857", "Saving Private Ryan", "1998-07-24", "Drama, History, War", "world war ii, d-day, rescue mission", 50.8, 8.2, 15500, 169, "Soldiers search for a paratrooper behind enemy lines."),
    ("205596", "The Imitation Game", "2014-11-14", "History, Drama, Thriller, War", "biography, world war ii, codebreaking, mathematician", 40.3, 8.0, 16000, 114, "Alan Turing cracks the Enigma code."),
    ("266856", "The Theory of Everything", "2014-11-07", "Drama, Romance", "biography, physicist, disease", 30.6, 7.8, 11000, 123, "The life of the physicist Stephen Hawking."),
    ("453", "A Beautiful Mind", "2001-12-11", "Drama, Romance", "biography, mathematician, schizophrenia", 35.1, 7.9, 10500, 135, "A brilliant mathematician struggles with schizophrenia."),
    ("278", "The Shawshank Redemption", "1994-09-23", "Drama, Crime", "prison, friendship, based on novel or book", 100.4, 8.7, 26000, 142, "Two imprisoned men bond over a number of years."),
    ("238", "The Godfather", "1972-03-14", "Drama, Crime", "mafia, family, based on novel or book", 95.6, 8.7, 19500, 175, "The aging patriarch of a crime dynasty transfers control to his son."),
    ("680", "Pulp Fiction", "1994-09-10", "Thriller, Crime", "nonlinear timeline, hitman, crime boss", 70.2, 8.5, 27000, 154, "Stories of crime in Los Angeles intertwine."),
    ("550", "Fight Club", "1999-10-15", "Drama", "insomnia, split personality, based on novel or book", 75.0, 8.4, 28000, 139, "An insomniac office worker forms an underground fight club."),
    ("13", "Forrest Gump", "1994-06-23", "Comedy, Drama, Romance", "vietnam war, based on novel or book, friendship", 80.8, 8.5, 26000, 142, "A man with a low IQ witnesses defining events of history."),
    ("120", "The Lord of the Rings: The Fellowship of the Ring", "2001-12-18", "Adventure, Fantasy, Action", "based on novel or book, magic, quest, epic", 90.3, 8.4, 24000, 179, "A hobbit sets out to destroy a powerful ring."),
    ("299534", "Avengers: Endgame", "2019-04-24", "Adventure, Science Fiction, Action", "superhero, time travel, sequel", 120.9, 8.3, 24500, 181, "The Avengers assemble once more to reverse Thanos' actions."),
    ("569094", "Spider-Man: Across the Spider-Verse", "2023-05-31", "Animation, Action, Adventure, Science Fiction", "superhero, multiverse, sequel", 180.2, 8.4, 5900, 140, "Miles Morales is catapulted across the multiverse."),
    ("502356", "The Super Mario Bros. Movie", "2023-04-05", "Animation, Family, Adventure, Fantasy, Comedy", "based on video game, plumber, princess", 170.5, 7.7, 7800, 92, "A plumber named Mario travels through an underground labyrinth."),
    ("385687", "Fast X", "2023-05-17", "Action, Crime, Thriller", "car race, sequel, revenge", 160.3, 7.2, 4700, 142, "Dom Toretto faces a vengeful foe."),
    ("298618", "The Flash", "2023-06-13", "Science Fiction, Action, Adventure", "superhero, dc comics, multiverse, time travel", 150.6, 6.9, 4200, 144, "Barry Allen uses his powers to travel back in time."),
    ("447365", "Guardians of the Galaxy Vol. 3", "2023-05-03", "Science Fiction, Adventure, Action", "superhero, space, sequel", 140.1, 8.0, 6200, 150, "The Guardians protect one of their own."),
    ("447277", "The Little Mermaid", "2023-05-18", "Adventure, Family, Fantasy, Romance", "mermaid, remake, based on fairy tale", 110.7, 6.4, 2200, 135, "A young mermaid makes a deal to experience life on land."),
    ("614930", "Teenage Mutant Ninja Turtles: Mutant Mayhem", "2023-07-31", "Animation, Comedy, Action", "turtle, superhero, new york city", 100.2, 7.2, 1300, 99, "Four turtle brothers try to be accepted as normal teenagers."),
]

# same id as Inception with a lower vote count: must lose deduplication
DUPLICATE = ("27205", "Inception", "2010-07-15", "Action", "dream", 1.0, 6.0, 10, 148, "duplicate row")


def write_movies():
    with open(OUT / "movies.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for mid, title, date, genres, kw, pop, va, vc, rt, ov in MOVIES[:5] + [DUPLICATE] + MOVIES[5:]:
            w.writerow([mid, title, va, vc, "Released", date, rt, "", "en", ov, pop, genres, kw])
        w.writerow(["999999", "", 0, 0, "Rumored", "unknown", "", "", "en", "", "", "", ""])


def write_ratings(n_users=60, seed=2023):
    rng = np.random.default_rng(seed)
    n_items = len(MOVIES)
    ids = [m[0] for m in MOVIES]
    item_bias = rng.normal(0, 0.4, n_items)
    P = rng.normal(0, 0.6, (n_users, 3))
    Q = rng.normal(0, 0.6, (n_items, 3))
    user_bias = rng.normal(0, 0.3, n_users)
    popularity = np.array([m[5] for m in MOVIES])
    pick_p = popularity / popularity.sum()
    t0 = 1_690_000_000
    rows = []
    for u in range(n_users):
        n = int(rng.integers(8, 25))
        items = rng.choice(n_items, size=n, replace=False, p=pick_p)
        for i in items:
            r = 3.6 + user_bias[u] + item_bias[i] + P[u] @ Q[i] + rng.normal(0, 0.4)
            r = float(np.clip(np.round(r * 2) / 2, 0.5, 5.0))
            rows.append((str(u + 1), ids[i], r, t0 + int(rng.integers(0, 10_000_000))))
    rows.sort(key=lambda t: (t[3], int(t[0])))
    with open(OUT / "ratings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["userId", "movieId", "rating", "timestamp"])
        for row in rows:
            w.writerow(row)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_movies()
    write_ratings()
