#!/usr/bin/env python3
"""Regenerates the snapshot bundles under fixtures/.

Each page is a nested description of elements with boxes; the script renders
the screenshot with Pillow and writes manifest.json and page.html.
"""
import argparse
import html
import json
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

VOID = {"img", "input", "br", "hr", "meta", "link"}


def el(tag, box=None, attrs=None, text=None, fill=None, ink=(20, 20, 20), children=(), outline=None):
    return {
        "tag": tag,
        "box": box,
        "attrs": attrs or {},
        "text": text,
        "fill": fill,
        "ink": ink,
        "outline": outline,
        "children": list(children),
    }


def cart_item(k, y, name, price, href, src):
    return el("li", (24, y, 752, 128), {"class": "cart-item"}, fill=(246, 246, 246), outline=(210, 210, 210), children=[
        el("img", (32, y + 8, 112, 112), {"src": src, "alt": name}, fill=(120 + 30 * k, 160, 200 - 30 * k)),
        el("a", (160, y + 16, 400, 24), {"href": href, "class": "item-title"}, text=name, ink=(0, 90, 180)),
        el("span", (160, y + 56, 100, 20), {"class": "price"}, text=price),
        el("button", (680, y + 48, 80, 32), {"class": "delete", "type": "button"}, text="Delete",
           fill=(220, 60, 60), ink=(255, 255, 255)),
    ])


def mini_cart():
    items = [
        ("Wireless Mouse", "$24.99", "/p/101", "img/mouse.png"),
        ("USB-C Charging Cable", "$12.50", "/p/202", "img/cable.png"),
        ("Mechanical Keyboard", "$89.00", "/p/303", "img/keyboard.png"),
    ]
    nav = el("nav", (0, 0, 800, 60), {"class": "top"}, fill=(35, 47, 62), children=[
        el("div", (16, 8, 768, 44), {"class": "nav-inner"}, children=[
            el("img", (16, 14, 64, 32), {"src": "img/logo.png", "alt": "ShopLogo"}, fill=(255, 153, 0)),
            el("a", (100, 20, 60, 20), {"href": "/"}, text="Home", ink=(255, 255, 255)),
            el("a", (170, 20, 60, 20), {"href": "/orders"}, text="Orders", ink=(255, 255, 255)),
            el("input", (260, 16, 300, 28), {"type": "search", "name": "q", "placeholder": "Search products"},
               fill=(255, 255, 255)),
            el("button", (680, 16, 80, 28), {"class": "cart", "type": "button"}, text="Cart (3)",
               fill=(255, 153, 0)),
        ]),
    ])
    main = el("main", (0, 60, 800, 540), fill=(255, 255, 255), children=[
        el("div", (24, 80, 752, 500), {"class": "main-inner"}, children=[
            el("h1", (24, 80, 400, 36), text="Your Shopping Cart"),
            el("div", None, {"class": "cart-items", "style": "display:contents"}, children=[
                el("ul", (24, 130, 752, 420), {"class": "cart-list"}, children=[
                    cart_item(k, 130 + 140 * k, *item) for k, item in enumerate(items)
                ]),
            ]),
            el("input", None, {"type": "hidden", "name": "csrf", "value": "t0k3n"}),
        ]),
    ])
    modal = el("div", None, {"class": "modal", "style": "display:none"}, children=[
        el("p", None, text="Item removed from cart"),
    ])
    body = el("body", (0, 0, 800, 600), children=[nav, main, modal])
    root = el("html", (0, 0, 800, 600), fill=(255, 255, 255), children=[body])
    return {"title": "Shopping Cart", "url": "http://shop.example/cart", "size": (800, 600), "root": root}


def login_form():
    form = el("form", (200, 120, 400, 330), {"action": "/login", "method": "post"}, fill=(250, 250, 250),
              outline=(200, 200, 200), children=[
        el("h2", (230, 140, 200, 30), text="Sign in"),
        el("input", (230, 190, 340, 32), {"type": "email", "name": "email", "placeholder": "Email address"},
           fill=(255, 255, 255), outline=(180, 180, 180)),
        el("input", (230, 236, 340, 32), {"type": "password", "name": "password", "placeholder": "Password"},
           fill=(255, 255, 255), outline=(180, 180, 180)),
        el("label", (230, 282, 200, 20), text="Remember me", children=[
            el("input", (230, 284, 16, 16), {"type": "checkbox", "name": "remember"}, fill=(255, 255, 255),
               outline=(120, 120, 120)),
        ]),
        el("button", (230, 320, 340, 36), {"type": "submit"}, text="Log in", fill=(40, 110, 220),
           ink=(255, 255, 255)),
        el("a", (230, 372, 160, 20), {"href": "/password/reset"}, text="Forgot password?", ink=(0, 90, 180)),
        el("p", None, {"class": "error", "style": "display:none"}, text="Invalid credentials"),
    ])
    header = el("header", (0, 0, 800, 56), fill=(30, 30, 30), children=[
        el("a", (20, 16, 120, 24), {"href": "/", "class": "brand"}, text="Acme Portal", ink=(255, 255, 255)),
        el("a", (680, 16, 100, 24), {"href": "/signup"}, text="Create account", ink=(255, 255, 255)),
    ])
    footer = el("footer", (0, 560, 800, 40), fill=(240, 240, 240), children=[
        el("p", (20, 570, 300, 20), text="Copyright 2024 Acme Corp"),
    ])
    body = el("body", (0, 0, 800, 600), fill=(255, 255, 255), children=[
        header,
        el("div", (180, 100, 440, 370), {"class": "page"}, children=[form]),
        footer,
    ])
    root = el("html", (0, 0, 800, 600), fill=(255, 255, 255), children=[body])
    return {"title": "Sign in - Acme Portal", "url": "http://acme.example/login", "size": (800, 600), "root": root}


PAGES = {"mini-cart": mini_cart, "login-form": login_form}


def flatten(node, parent, out):
    node["id"] = f"n{len(out)}"
    shown = (parent is None or parent["shown"]) and "display:none" not in node["attrs"].get("style", "")
    node["shown"] = shown
    visible = shown and node["box"] is not None
    out.append((node, parent, visible))
    for c in node["children"]:
        flatten(c, node, out)


def render(page, flat):
    w, h = page["size"]
    img = Image.new("RGB", (w, h), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    font = ImageFont.load_default()
    for node, _, visible in flat:
        if not visible:
            continue
        x, y, bw, bh = node["box"]
        if node["fill"] is not None:
            draw.rectangle([x, y, x + bw - 1, y + bh - 1], fill=node["fill"])
        if node["outline"] is not None:
            draw.rectangle([x, y, x + bw - 1, y + bh - 1], outline=node["outline"])
        if node["text"]:
            tx = x + 4 if not node["children"] else x + 22
            draw.text((tx, y + 4), node["text"], fill=node["ink"], font=font)
    return img


def manifest(page, flat):
    nodes = []
    for node, parent, visible in flat:
        x, y, bw, bh = node["box"] if visible else (0, 0, 0, 0)
        nodes.append({
            "id": node["id"],
            "parent_id": parent["id"] if parent else None,
            "tag": node["tag"],
            "attrs": node["attrs"],
            "text": node["text"],
            "bbox": {"x": x, "y": y, "w": bw, "h": bh},
            "visible": visible,
        })
    w, h = page["size"]
    return {"url": page["url"], "viewport": {"width": w, "height": h}, "nodes": nodes}


def to_html(node, depth, title):
    pad = "  " * depth
    attrs = "".join(f' {k}="{html.escape(v)}"' for k, v in node["attrs"].items())
    if node["tag"] in VOID:
        return f"{pad}<{node['tag']}{attrs}>\n"
    inner = ""
    if node["tag"] == "html":
        inner += f"{pad}  <head><title>{html.escape(title)}</title></head>\n"
    if node["text"]:
        inner += f"{pad}  {html.escape(node['text'])}\n"
    for c in node["children"]:
        inner += to_html(c, depth + 1, title)
    return f"{pad}<{node['tag']}{attrs}>\n{inner}{pad}</{node['tag']}>\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    args = ap.parse_args()
    for name, build in PAGES.items():
        page = build()
        flat = []
        flatten(page["root"], None, flat)
        d = Path(args.out) / name
        d.mkdir(parents=True, exist_ok=True)
        (d / "manifest.json").write_text(json.dumps(manifest(page, flat), indent=2) + "\n")
        (d / "page.html").write_text("<!DOCTYPE html>\n" + to_html(page["root"], 0, page["title"]))
        render(page, flat).save(d / "screenshot.png", optimize=False)
        print(f"{name}: {len(flat)} nodes, {sum(v for _, _, v in flat)} visible")


if __name__ == "__main__":
    main()
