import pymysql

conn = pymysql.connect(host="127.0.0.1", user="root", password="Xk9#qL2vW7", database="identity")
cur = conn.cursor()
cur.execute("SELECT passport, ssn FROM citizens")
