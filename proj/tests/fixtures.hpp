#pragma once

#include <string>
#include <vector>

namespace fixtures {

// Bubble sort whose counter carries a selection-sort flavoured name.
inline std::string bubble_sort_noisy() {
  return "def bubble(arr):\n"
         "    n = len(arr)\n"
         "    for i in range(n):\n"
         "        a1_selection = 0\n"
         "        for j in range(n - i - 1):\n"
         "            if arr[j] > arr[j + 1]:\n"
         "                arr[j], arr[j + 1] = arr[j + 1], arr[j]\n"
         "                a1_selection += 1\n"
         "        if a1_selection == 0:\n"
         "            break\n"
         "    return arr\n";
}

inline std::string bubble_sort_denoised() {
  return "def bubble(arr):\n"
         "    n = len(arr)\n"
         "    for i in range(n):\n"
         "        count = 0\n"
         "        for j in range(n - i - 1):\n"
         "            if arr[j] > arr[j + 1]:\n"
         "                arr[j], arr[j + 1] = arr[j + 1], arr[j]\n"
         "                count += 1\n"
         "        if count == 0:\n"
         "            break\n"
         "    return arr\n";
}

inline std::vector<std::string> python_samples() {
  return {
      bubble_sort_noisy(),
      "x = 1",
      "def f(a): return a + a",
      "import math\n"
      "def area(radius, scale=2.0):\n"
      "    '''Docstring with def and (parens'''\n"
      "    result = math.pi * radius ** 2\n"
      "    return result * scale\n",
      "def search(items, target):\n"
      "    lo, hi = 0, len(items) - 1\n"
      "    while lo <= hi:\n"
      "        mid = (lo + hi) // 2\n"
      "        if items[mid] == target:\n"
      "            return mid\n"
      "        elif items[mid] < target:\n"
      "            lo = mid + 1\n"
      "        else:\n"
      "            hi = mid - 1\n"
      "    return -1\n",
      "class Stack:\n"
      "    def __init__(self):\n"
      "        self.items = []\n"
      "    def push(self, value):\n"
      "        self.items.append(value)\n"
      "    @property\n"
      "    def top(self):\n"
      "        return self.items[-1] if self.items else None\n",
      "def stats(data):\n"
      "    total = sum(d for d in data)\n"
      "    mapping = {k: v for k, v in enumerate(data) if v > 0}\n"
      "    uniq = {x % 3 for x in data}\n"
      "    pairs = [(a, b) for a in data for b in data if a < b]\n"
      "    return total, mapping, uniq, pairs\n",
      "def gen(n):\n"
      "    for i in range(n):\n"
      "        yield i * 2\n"
      "    acc = 0\n"
      "    acc += n; acc -= 1\n"
      "    return (acc,)\n",
      "async def fetch(session, url):\n"
      "    async with session.get(url) as resp:\n"
      "        body = await resp.text()\n"
      "    return body\n",
      "def guarded(path):\n"
      "    try:\n"
      "        with open(path) as fh:\n"
      "            content = fh.read()\n"
      "    except (IOError, ValueError) as exc:\n"
      "        content = str(exc)\n"
      "    finally:\n"
      "        done = True\n"
      "    return content, done\n",
      "def slicing(seq):\n"
      "    head = seq[:2]\n"
      "    tail = seq[2:]\n"
      "    step = seq[::2]\n"
      "    mat = seq[1:3, ::-1]\n"
      "    first, *rest = seq\n"
      "    return head + tail + step + [mat, first, rest]\n",
      "def kw(*args, **kwargs):\n"
      "    merged = dict(**kwargs)\n"
      "    values = [*args, *merged.values()]\n"
      "    fn = lambda: len(values)\n"
      "    return sorted(values, key=lambda item: -item, reverse=True), fn\n",
      "counter = 0\n"
      "def bump():\n"
      "    global counter\n"
      "    counter = counter + 1\n"
      "    assert counter > 0, 'positive'\n"
      "    del_me = [counter]\n"
      "    del del_me[0]\n"
      "    return not counter is None and counter not in (1, 2)\n",
      "def matrix(rows, cols):\n"
      "    grid = [[0] * cols for _ in range(rows)]\n"
      "    for r in range(rows):\n"
      "        for c in range(cols):\n"
      "            grid[r][c] = r * cols + c if r != c else -1\n"
      "    flat = [v for row in grid for v in row]\n"
      "    return grid, flat, 0x1F, 1e-3, 3j, 1_000\n",
      "def fmt(name: str, width: int = 4) -> str:\n"
      "    padded: str = name.ljust(width)\n"
      "    return padded + b'raw'.decode() + r'\\d+' + 'a' 'b'\n",
      "def parse(text):\n"
      "    tokens = text.split()\n"
      "    while True:\n"
      "        if not tokens:\n"
      "            break\n"
      "        head = tokens.pop(0)\n"
      "        if head == '#':\n"
      "            continue\n"
      "    else:\n"
      "        pass\n"
      "    return {**{'a': 1}, 'b': 2}, {1, 2,}, (), [], {}\n",
      "from . import sibling\n"
      "from ..pkg.mod import (alpha, beta as b2,)\n"
      "import os.path, sys as system\n"
      "@decorate(level=2)\n"
      "class Node(Base, metaclass=Meta):\n"
      "    def __repr__(self):\n"
      "        return 'Node(%r)' % (self.value,)\n"
      "def walk(node, depth=0, *, seen=None):\n"
      "    def inner(x):\n"
      "        nonlocal depth\n"
      "        depth += 1\n"
      "        return x\n"
      "    try:\n"
      "        out = inner(node)\n"
      "    except KeyError:\n"
      "        raise RuntimeError('bad') from None\n"
      "    else:\n"
      "        out = out\n"
      "    ok = 0 < depth <= 10 != 11\n"
      "    print(*[out], sep='', file=system.stderr)\n"
      "    return out, ok\n",
      "def bits(x, y):\n"
      "    z = x & y | x ^ ~y\n"
      "    z <<= 2\n"
      "    z >>= 1\n"
      "    w = (x if x > y\n"
      "         else y)\n"
      "    return z % 7, w @ w if False else ..., \\\n"
      "        z\n",
  };
}

}  // namespace fixtures
