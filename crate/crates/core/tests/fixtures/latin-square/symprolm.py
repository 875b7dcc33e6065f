from z3 import Solver, Int, And, Distinct, sat

with open('input.txt') as f:
    board = [[int(x) for x in line.split()] for line in f if line.strip()]
n = len(board)
X = [[Int(f'x_{i}_{j}') for j in range(n)] for i in range(n)]
s = Solver()
for i in range(n):
    for j in range(n):
        s.add(And(X[i][j] >= 1, X[i][j] <= n))
        if board[i][j] != 0:
            s.add(X[i][j] == board[i][j])
for i in range(n):
    s.add(Distinct(X[i]))
    s.add(Distinct([X[r][i] for r in range(n)]))
if s.check() == sat:
    m = s.model()
    with open('output.txt', 'w') as f:
        for i in range(n):
            f.write(' '.join(str(m.evaluate(X[i][j]).as_long()) for j in range(n)) + '\n')
