"""Regenerates fixtures/corpus/*.json. Output is deterministic.

    python3 crates/core/fixtures/build_corpus.py
"""

import base64
import io
import json
import random
from pathlib import Path
from urllib.parse import urljoin

from PIL import Image

OUT = Path(__file__).parent / "corpus"


def noise_png(w, h, seed):
    rng = random.Random(seed)
    img = Image.new("L", (w, h))
    img.putdata([rng.randrange(256) for _ in range(w * h)])
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def gradient_png(w, h, seed):
    # Smooth structure plus noise: distinct thumbnails per seed.
    rng = random.Random(seed)
    fx, fy = rng.uniform(0.5, 3), rng.uniform(0.5, 3)
    data = [
        int((x * fx + y * fy) * 255 / (w * fx + h * fy)) ^ rng.randrange(64)
        for y in range(h)
        for x in range(w)
    ]
    img = Image.new("L", (w, h))
    img.putdata(data)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def flat_png(w, h):
    img = Image.new("RGB", (w, h), (40, 90, 160))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def b64(data):
    return base64.b64encode(data).decode("ascii")


def page(title, paragraphs, images=()):
    body = "\n".join(f"<p>{p}</p>" for p in paragraphs)
    imgs = "\n".join(
        f'<figure><img src="{src}" alt="{alt}" width="{w}" height="{h}"></figure>' for src, alt, w, h in images
    )
    return f"""<!doctype html>
<html><head><title>{title}</title>
<script>window.analytics = {{track: function () {{}}}};</script>
<style>body {{ font-family: serif; }}</style></head>
<body>
<header><a href="/">Home</a> <a href="/science">Science</a> <a href="/subscribe">Subscribe to our newsletter today</a></header>
<nav class="site-nav"><ul><li>Latest</li><li>Space</li><li>Earth</li><li>Sign in to read more stories</li></ul></nav>
<main><article><h1>{title}</h1>
{body}
{imgs}
</article></main>
<aside class="related">Related: the ten best telescopes for beginners and other stories you may like</aside>
<div class="cookie-banner">We use cookies to improve your experience on this website, accept to continue.</div>
<footer>Copyright 2024 Example Media. All rights reserved. Terms of service and privacy policy apply.</footer>
</body></html>
"""


SHARED_ECLIPSE = (
    "During a total solar eclipse the Moon covers the entire disk of the Sun and the solar corona "
    "becomes visible as a pale halo, which is why eclipse chasers travel to the path of totality."
)

ECLIPSE = {
    "query": "solar eclipse",
    "web": [
        (
            "https://astro.example/guides/solar-eclipse",
            "What happens during a solar eclipse",
            [
                "A solar eclipse occurs when the Moon passes between the Earth and the Sun and casts a shadow on the "
                "Earth. A total solar eclipse is only visible from the narrow path where the darkest shadow falls.",
                SHARED_ECLIPSE,
                "Never look at a partial solar eclipse without certified eclipse glasses, because the uncovered part "
                "of the Sun can burn the retina within seconds even when the sky appears dim.",
                "Short line.",
            ],
            [("/img/corona.png", "solar eclipse corona over the horizon", 240, 180)],
        ),
        (
            "https://skyguide.example/eclipse-2024",
            "Eclipse season: planning your trip",
            [
                SHARED_ECLIPSE,
                "Weather is the biggest risk for any solar eclipse trip; eclipse forecasts based on cloud climatology "
                "help observers pick a site with the best chance of a clear view of totality.",
                "Our store also sells camping chairs, travel mugs and branded hoodies for every season of the year.",
            ],
            [],
        ),
        (
            "https://broken.example/eclipse-live",
            "Live eclipse coverage",
            None,  # fetch fails
            [],
        ),
    ],
    "news": [
        (
            "https://news.example/2024/04/eclipse-crowds",
            "Millions watch the solar eclipse",
            [
                "Millions of people watched the solar eclipse as the shadow of the Moon crossed the continent, with "
                "crowds cheering when totality darkened the sky in the middle of the afternoon.",
                # Near-duplicate of the guide paragraph: two trailing words added.
                SHARED_ECLIPSE[:-1] + " each year.",
                "Traffic authorities reported long queues on rural highways after the event as visitors headed home.",
            ],
            [("https://cdn.news.example/photos/crowd.png", "crowd watching the eclipse", 256, 192)],
        ),
    ],
    "images": [
        ("https://images.example/eclipse/diamond-ring.png", "Diamond ring effect at a solar eclipse", ("noise", 320, 240)),
        ("https://images.example/eclipse/partial.png", "Partial solar eclipse through filters", ("gradient", 256, 256)),
        ("https://images.example/eclipse/thumb.png", "Eclipse thumbnail", ("declared_small", 64, 64)),
        ("https://images.example/eclipse/flat.png", "Solar eclipse poster", ("flat", 300, 300)),
        ("https://images.example/eclipse/broken.png", "Broken eclipse image", ("corrupt", 400, 300)),
    ],
}

ROVER = {
    "query": "mars rover",
    "web": [
        (
            "https://space.example/missions/mars-rover",
            "How a Mars rover explores the red planet",
            [
                "A Mars rover is a robotic vehicle that drives across the surface of Mars, studying rocks and soil "
                "with cameras, spectrometers and a drill to search for signs of ancient water.",
                "Each Mars rover receives driving commands from engineers on Earth, because radio signals take many "
                "minutes to travel between Mars and Earth and real-time control of the rover is impossible.",
                "Sign up for our weekly newsletter and never miss a story from our editors and contributors.",
            ],
            [("media/tracks.png", "rover tracks on mars", 200, 150)],
        ),
        (
            "https://rovers.example/perseverance",
            "Perseverance rover samples",
            [
                "The Perseverance Mars rover collects rock cores in sealed tubes so that a future mission can return "
                "the Mars samples to laboratories on Earth for detailed study.",
                "Each Mars rover receives driving commands from engineers on Earth, because radio signals take many "
                "minutes to travel between Mars and Earth and real-time control of the rover is impossible.",
            ],
            [],
        ),
    ],
    "news": [
        (
            "https://news.example/2024/mars-rover-dust",
            "Mars rover survives dust storm",
            [
                "The rover on Mars rode out a regional dust storm by pausing drives and conserving power until the "
                "Martian sky cleared and its instruments could resume the rover science campaign.",
            ],
            [],
        ),
    ],
    "images": [
        ("https://images.example/mars/selfie.png", "Mars rover selfie on the red planet", ("noise", 300, 200)),
        ("https://images.example/mars/wheel.png", "Close-up of a Mars rover wheel", ("gradient", 240, 240)),
        ("https://images.example/mars/icon.png", "Rover icon", ("declared_small", 48, 48)),
    ],
}


def image_payload(kind, w, h, seed):
    if kind == "noise":
        return noise_png(w, h, seed)
    if kind == "gradient":
        return gradient_png(w, h, seed)
    if kind == "flat":
        return flat_png(w, h)
    if kind == "declared_small":
        return flat_png(w, h)
    if kind == "corrupt":
        return b"\x89PNG\r\n\x1a\nthis is not really an image"
    raise ValueError(kind)


def slug(query):
    return query.replace(" ", "-")


def build(topic, seed_base):
    seed = seed_base
    query = topic["query"]
    for vertical in ("web", "news"):
        hits, assets = [], []
        for url, title, paragraphs, images in topic[vertical]:
            hit = {"url": url, "title": title, "snippet": title}
            if paragraphs is None:
                hit["fetch_error"] = "connection reset by peer"
            else:
                hit["body"] = page(title, paragraphs, images)
                for src, _alt, w, h in images:
                    seed += 1
                    absolute = urljoin(url, src)
                    assets.append({"url": absolute, "width": w, "height": h, "body_base64": b64(noise_png(w, h, seed))})
            hits.append(hit)
        record = {"query": query, "vertical": vertical, "hits": hits}
        if assets:
            record["assets"] = assets
        write(f"{slug(query)}.{vertical}.json", record)
    hits = []
    for url, title, (kind, w, h) in topic["images"]:
        seed += 1
        hit = {"url": url, "title": title, "body_base64": b64(image_payload(kind, w, h, seed))}
        if kind == "declared_small":
            hit["width"], hit["height"] = w, h
        hits.append(hit)
    write(f"{slug(query)}.images.json", {"query": query, "vertical": "images", "hits": hits})


def write(name, record):
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    build(ECLIPSE, 100)
    build(ROVER, 200)
