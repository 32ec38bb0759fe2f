import pymysql

conn = pymysql.connect(host="120.77.222.217", user="shop", password="Fm)4dj", database="shop")
cur = conn.cursor()
cur.execute("SELECT phone, email FROM buyers")
